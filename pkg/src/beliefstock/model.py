"""Problem instances: costs, demand grid and the joint modulation kernel.

The kernel is stored as one array ``joint`` of shape ``(M, Z, N, N)`` with
``joint[k, z, i, j]`` the probability of demand ``demands[k]``, observation
``z`` and next state ``j`` given current state ``i``.  Factored inputs are
expanded into this form on load; nothing downstream looks at factors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np

from .errors import ModelError

STOCH_TOL = 1e-9
# factored rows are printed to a few decimals in practice; anything this close
# to 1 is rescaled, anything further is an input error
RENORM_TOL = 1e-3


@dataclass(frozen=True)
class CostParams:
    p: float
    h: float
    K: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("p", "h", "K", "beta"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ModelError(f"cost parameter {name} is not finite")
            object.__setattr__(self, name, float(v))
        if self.p <= 0:
            raise ModelError(f"p must be positive, got {self.p}")
        if self.h <= 0:
            raise ModelError(f"h must be positive, got {self.h}")
        if self.K < 0:
            raise ModelError(f"K must be nonnegative, got {self.K}")
        if not 0.0 <= self.beta < 1.0:
            raise ModelError(f"beta must lie in [0, 1), got {self.beta}")

    @property
    def critical_ratio(self) -> float:
        return self.p / (self.p + self.h)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModelSpec:
    demands: np.ndarray
    joint: np.ndarray
    costs: CostParams
    name: str = field(default="")

    def __post_init__(self):
        d = np.asarray(self.demands)
        if d.ndim != 1 or d.size == 0:
            raise ModelError("demands must be a nonempty list")
        if not np.all(np.isfinite(d.astype(float))) or np.any(d != np.round(d)):
            raise ModelError("demands must be integers")
        d = d.astype(np.int64)
        if np.any(np.diff(d) <= 0):
            raise ModelError(f"demands must be strictly increasing, got {d.tolist()}")
        d.setflags(write=False)
        object.__setattr__(self, "demands", d)

        J = np.asarray(self.joint, dtype=float)
        if J.ndim != 4 or J.shape[2] != J.shape[3]:
            raise ModelError(f"joint kernel must have shape (M, Z, N, N), got {J.shape}")
        if J.shape[0] != d.size:
            raise ModelError(f"joint kernel has {J.shape[0]} demand slices, expected {d.size}")
        if J.shape[1] < 1 or J.shape[2] < 1:
            raise ModelError("joint kernel needs at least one state and one observation")
        if not np.all(np.isfinite(J)):
            raise ModelError("joint kernel contains non-finite entries")
        if np.any(J < 0):
            k, z, i, j = np.argwhere(J < 0)[0]
            raise ModelError(f"negative probability at d={k}, z={z}, i={i}, j={j}")
        rows = J.sum(axis=(0, 1, 3))
        bad = np.nonzero(np.abs(rows - 1.0) > STOCH_TOL)[0]
        if bad.size:
            i = int(bad[0])
            raise ModelError(f"joint kernel row {i} sums to {rows[i]:.12g}, expected 1")
        object.__setattr__(self, "joint", _readonly(J))
        if not isinstance(self.costs, CostParams):
            raise ModelError("costs must be a CostParams")

    # shapes
    @property
    def N(self) -> int:
        return self.joint.shape[2]

    @property
    def M(self) -> int:
        return self.joint.shape[0]

    @property
    def Z(self) -> int:
        return self.joint.shape[1]

    @property
    def p(self) -> float:
        return self.costs.p

    @property
    def h(self) -> float:
        return self.costs.h

    @property
    def K(self) -> float:
        return self.costs.K

    @property
    def beta(self) -> float:
        return self.costs.beta

    # cached derived arrays
    @cached_property
    def marginal(self) -> np.ndarray:
        """P(d) = sum_z P(d, z), shape (M, N, N)."""
        return _readonly(self.joint.sum(axis=1))

    @cached_property
    def transition(self) -> np.ndarray:
        """Modulation chain transition matrix, shape (N, N)."""
        return _readonly(self.joint.sum(axis=(0, 1)))

    @cached_property
    def outcome_rows(self) -> np.ndarray:
        """sigma(d, z, e_i) for every state, shape (M, Z, N)."""
        return _readonly(self.joint.sum(axis=3))

    @cached_property
    def demand_rows(self) -> np.ndarray:
        """sigma(d, e_i), shape (M, N)."""
        return _readonly(self.marginal.sum(axis=2))

    def replace(self, *, demands=None, joint=None, costs=None, name=None) -> "ModelSpec":
        return ModelSpec(
            self.demands if demands is None else demands,
            self.joint if joint is None else joint,
            self.costs if costs is None else costs,
            self.name if name is None else name,
        )

    def with_costs(self, **kw) -> "ModelSpec":
        c = self.costs
        vals = dict(p=c.p, h=c.h, K=c.K, beta=c.beta)
        vals.update(kw)
        return self.replace(costs=CostParams(**vals))

    def to_document(self) -> dict:
        return {
            "demands": [int(v) for v in self.demands],
            "p": self.p,
            "h": self.h,
            "K": self.K,
            "beta": self.beta,
            "joint": {"Z": self.Z, "P_dz": self.joint.tolist()},
        }

    def __repr__(self):
        return (f"ModelSpec(N={self.N}, M={self.M}, Z={self.Z}, "
                f"demands={self.demands.tolist()}, costs={self.costs})")


def _stochastic_rows(name: str, A: np.ndarray, renormalize: bool) -> np.ndarray:
    if A.ndim != 2 or A.size == 0:
        raise ModelError(f"{name} must be a nonempty matrix")
    if not np.all(np.isfinite(A)):
        raise ModelError(f"{name} contains non-finite entries")
    if np.any(A < 0):
        i, j = np.argwhere(A < 0)[0]
        raise ModelError(f"{name}[{i}][{j}] is negative")
    s = A.sum(axis=1)
    tol = RENORM_TOL if renormalize else STOCH_TOL
    bad = np.nonzero(np.abs(s - 1.0) > tol)[0]
    if bad.size:
        i = int(bad[0])
        raise ModelError(f"{name} row {i} sums to {s[i]:.12g}, expected 1")
    return A / s[:, None] if renormalize else A


def build_factored(P, QD, RZ=None, *, renormalize: bool = True) -> np.ndarray:
    """Expand P_ij * q_jd * r_jz into the joint (M, Z, N, N) array.

    Rows within ``RENORM_TOL`` of summing to one are rescaled when
    ``renormalize`` is set (published tables are rounded).
    """
    P = np.asarray(P, dtype=float)
    QD = np.asarray(QD, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ModelError(f"P must be square, got shape {P.shape}")
    N = P.shape[0]
    if QD.ndim != 2 or QD.shape[0] != N:
        raise ModelError(f"QD must have {N} rows, got shape {QD.shape}")
    if RZ is None:
        RZ = np.ones((N, 1))
    RZ = np.asarray(RZ, dtype=float)
    if RZ.ndim != 2 or RZ.shape[0] != N:
        raise ModelError(f"RZ must have {N} rows, got shape {RZ.shape}")
    P = _stochastic_rows("P", P, renormalize)
    QD = _stochastic_rows("QD", QD, renormalize)
    RZ = _stochastic_rows("RZ", RZ, renormalize)
    return np.einsum("ij,jk,jz->kzij", P, QD, RZ)


def derive_variant(model: ModelSpec, mode: str) -> ModelSpec:
    """``strip_aod``: drop the extra observation channel (Z=1).
    ``perfect_aod``: observe the next modulation state exactly (Z=N)."""
    if mode == "strip_aod":
        if model.Z == 1:
            return model
        return model.replace(joint=model.joint.sum(axis=1, keepdims=True))
    if mode == "perfect_aod":
        N = model.N
        J = np.zeros((model.M, N, N, N))
        for j in range(N):
            J[:, j, :, j] = model.marginal[:, :, j]
        return model.replace(joint=J)
    raise ModelError(f"unknown variant {mode!r}; expected strip_aod or perfect_aod")


# documents

def _schema(name: str) -> dict:
    text = resources.files("beliefstock.schemas").joinpath(name).read_text("utf-8")
    return json.loads(text)


def validate_document(doc: Any, schema_name: str) -> None:
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ModelError(f"schema violation at {where}: {exc.message}") from None


def load_model(document: str | bytes | Mapping) -> ModelSpec:
    """Build a validated model from a JSON document (text or parsed mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelError(f"model document is not valid JSON: {exc}") from None
    else:
        doc = dict(document)
    validate_document(doc, "model.schema.json")
    costs = CostParams(doc["p"], doc["h"], doc.get("K", 0.0), doc.get("beta", 0.0))
    demands = np.asarray(doc["demands"])
    if "factored" in doc:
        f = doc["factored"]
        try:
            joint = build_factored(f["P"], f["QD"], f.get("RZ"))
        except ValueError as exc:  # ragged nested lists
            raise ModelError(f"malformed factored arrays: {exc}") from None
    else:
        j = doc["joint"]
        try:
            joint = np.asarray(j["P_dz"], dtype=float)
        except ValueError as exc:
            raise ModelError(f"malformed joint array: {exc}") from None
        if joint.ndim != 4 or joint.shape[1] != j["Z"]:
            raise ModelError(f"joint.P_dz shape {joint.shape} does not match Z={j['Z']}")
    return ModelSpec(demands, joint, costs, name=str(doc.get("name", "")))


def load_model_file(path: str | Path) -> ModelSpec:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc.strerror}") from None
    model = load_model(text)
    if not model.name:
        model = model.replace(name=path.stem)
    return model


def bundled_model(name: str) -> ModelSpec:
    """Load one of the instances shipped in ``beliefstock/data``."""
    if not name.endswith(".json"):
        name += ".json"
    text = resources.files("beliefstock.data").joinpath(name).read_text("utf-8")
    model = load_model(text)
    return model if model.name else model.replace(name=name[:-5])
