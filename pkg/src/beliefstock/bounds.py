"""Bounds on the optimal cost when attainability fails.

* lower bound: every period restocks to the myopic level, ignoring any
  leftover stock above it (a Γ-set, independent of inventory);
* upper bound: the cost of actually running the myopic policy, evaluated
  on the outcome tree;
* ``Delta``: the worst one-period excess cost of starting above the myopic
  level, which bounds their difference;
* a shifted model whose demand grid is moved up by an integer ``delta`` so
  attainability holds, giving a lower bound that depends on inventory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assumptions import min_delta
from .belief import check_belief
from .errors import ModelError, ResourceLimitError
from .gamma import GammaSet, lattice_probes, myopic_tree_value, solve_finite, value_full
from .lp import solve_lp
from .model import ModelSpec
from .regions import INTERIOR_TOL, interior_slack
from .single_period import cost_vector, myopic_base_stock, myopic_range, p1_region, partition_p1

DEFAULT_DEPTH = 8


def lower_bound_sets(model: ModelSpec, n: int, **kw) -> list[GammaSet]:
    """Γ-sets of the lower bound for horizons 0..n."""
    return solve_finite(model, n, **kw)


def lower_bound_vL(model: ModelSpec, n: int, **kw) -> GammaSet:
    return lower_bound_sets(model, n, **kw)[-1]


def lower_bound_tree(model: ModelSpec, X, n: int, gammas=None) -> np.ndarray:
    """Lower bound at the rows of ``X`` by expanding the outcome tree.

    With ``gammas`` for horizons 0..k the tree is cut ``k`` periods before
    the end and finished with the set values, which is exact."""
    return myopic_tree_value(model, X, -np.inf, n, gammas, reset=True)


def upper_bound_vU(model: ModelSpec, x, s, n: int, *, depth: int = DEFAULT_DEPTH):
    """Expected discounted n-period cost of the myopic policy from (x, s)."""
    if n > depth:
        raise ResourceLimitError(f"horizon {n} exceeds the exact-evaluation depth {depth}")
    X = np.asarray(x, dtype=float)
    out = myopic_tree_value(model, np.atleast_2d(X), s, n)
    return float(out[0]) if X.ndim == 1 and np.ndim(s) == 0 else out


# gap bound

@dataclass
class GapReport:
    Delta: float
    pairs: list
    horizon: int
    beta: float
    s_range: tuple
    horizon_bound: float
    infinite_bound: float
    max_gap: float = float("nan")
    argmax: dict = field(default_factory=dict)
    max_gap_certified: float = float("nan")
    argmax_certified: dict = field(default_factory=dict)
    lower_at_argmax: float = float("nan")
    relative_bound: float = float("nan")
    probes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "Delta": self.Delta,
            "pairs": self.pairs,
            "horizon": self.horizon,
            "beta": self.beta,
            "s_range": list(self.s_range),
            "horizon_bound": self.horizon_bound,
            "infinite_bound": self.infinite_bound,
            "max_gap": self.max_gap,
            "argmax": self.argmax,
            "max_gap_certified": self.max_gap_certified,
            "argmax_certified": self.argmax_certified,
            "lower_at_argmax": self.lower_at_argmax,
            "relative_bound": self.relative_bound,
            "probes": self.probes,
        }


def _pair_lp(model: ModelSpec, m: int, level: int) -> dict:
    """max over the closure of the region with myopic level d_m of
    L(x, level) - L(x, d_m)."""
    reg = p1_region(model, m)
    A, b, strict = reg.constraint_arrays()
    c = cost_vector(model, level) - cost_vector(model, model.demands[m])
    res = solve_lp(c, A, b, simplex=True, maximize=True)
    row = {"m": int(model.demands[m]), "l": int(level), "value": float("nan"),
           "attained": False, "x": None}
    if not res.optimal:
        return row
    row["value"] = max(0.0, res.value)
    row["x"] = [float(v) for v in res.x]
    # attained iff the optimal face reaches the open part of the region
    A2 = np.vstack([A, -c[None, :]]) if len(A) else -c[None, :]
    b2 = np.r_[b, -res.value + 1e-9 * max(1.0, abs(res.value))]
    s2 = np.r_[strict, False].astype(bool)
    t, _ = interior_slack(A2, b2, s2, model.N)
    row["attained"] = bool(not strict.any() or t > INTERIOR_TOL)
    return row


def delta_pairs(model: ModelSpec) -> tuple[float, list, int]:
    """Delta, the per-pair LP table and the largest inventory it covers."""
    smin, smax = myopic_range(model)
    cap = smax - int(model.demands[0])
    regions = {r.meta["m"] for r in partition_p1(model)}
    d = model.demands
    pairs = []
    for m in range(model.M):
        if not smin <= d[m] <= cap or m not in regions:
            continue
        levels = [int(v) for v in d if d[m] < v <= cap]
        if cap not in levels and cap > d[m]:
            levels.append(cap)   # the range may end between demand points
        pairs.extend(_pair_lp(model, m, lv) for lv in levels)
    vals = [p["value"] for p in pairs if np.isfinite(p["value"])]
    return (max(vals) if vals else 0.0), pairs, cap


def default_gap_probes(N: int) -> np.ndarray:
    den = {1: 1, 2: 100, 3: 20}.get(N, 6)
    return lattice_probes(N, den)


def delta_gap(model: ModelSpec, horizon: int = 2, probes=None, *, seed: int = 0,
              gammas=None) -> GapReport:
    """Delta with its horizon bounds, plus the observed gap between the upper
    and lower bound on a probe set of (belief, inventory) pairs."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    Delta, pairs, cap = delta_pairs(model)
    beta = model.beta
    hb = Delta * sum(beta ** k for k in range(horizon))
    rep = GapReport(Delta, pairs, horizon, beta, (None, cap), hb, Delta / (1 - beta))
    if probes is None:
        X = default_gap_probes(model.N)
    else:
        X = np.atleast_2d(np.asarray(probes, dtype=float))
    smin, _ = myopic_range(model)
    top = max(int(model.demands[-1]), cap)
    S = np.arange(smin, top + 1)
    rep.s_range = (smin, cap)
    if gammas is None:
        gammas = lower_bound_sets(model, horizon)
    low = gammas[horizon].value(X)
    XX = np.repeat(X, len(S), axis=0)
    SS = np.tile(S, len(X))
    up = myopic_tree_value(model, XX, SS, horizon).reshape(len(X), len(S))
    gap = up - low[:, None]

    def arg(mask):
        g = np.where(mask[None, :], gap, -np.inf)
        i, j = np.unravel_index(np.argmax(g), g.shape)
        return float(g[i, j]), {"x": [float(v) for v in X[i]], "s": int(S[j])}, i

    rep.max_gap, rep.argmax, i = arg(np.ones(len(S), dtype=bool))
    rep.max_gap_certified, rep.argmax_certified, _ = arg(S <= cap)
    rep.lower_at_argmax = float(low[i])
    rep.relative_bound = Delta * (1 + beta) / low[i] if low[i] > 0 else float("nan")
    rep.probes = {"beliefs": len(X), "inventories": [int(S[0]), int(S[-1])], "seed": seed}
    return rep


# shifted model

def shift_model(model: ModelSpec, delta: int, *, check: bool = True) -> ModelSpec:
    """Same kernel and costs with every demand value raised by ``delta``."""
    if int(delta) != delta:
        raise ModelError(f"delta must be an integer, got {delta}")
    delta = int(delta)
    if delta < 0:
        raise ModelError("delta must be nonnegative")
    if check:
        need = min_delta(model)
        if delta < need:
            raise ModelError(f"delta={delta} is below the minimum {need} needed for attainability")
    if delta == 0:
        return model
    name = f"{model.name}+{delta}" if model.name else ""
    return model.replace(demands=model.demands + delta, name=name)


def tighter_lower_sets(model: ModelSpec, delta: int, n: int, **kw):
    shifted = shift_model(model, delta)
    return shifted, solve_finite(shifted, n, **kw)


def tighter_lower_vprime(model: ModelSpec, delta: int, n: int, x, s, *, prepared=None):
    """Optimal cost of the shifted problem at the same (belief, inventory).

    ``prepared`` may carry ``(shifted_model, gammas)`` from
    :func:`tighter_lower_sets` to avoid recomputing the sets."""
    shifted, gammas = prepared if prepared is not None else tighter_lower_sets(model, delta, n)
    return value_full(shifted, gammas, x, s, n)


# informativeness

def observation_array(model: ModelSpec):
    """q[(d, z), i, j]: probability of outcome (d, z) given a move i -> j,
    with the mask of moves that have positive probability."""
    T = model.transition
    mask = T > 0
    q = np.zeros((model.M * model.Z, model.N, model.N))
    flat = model.joint.reshape(model.M * model.Z, model.N, model.N)
    q[:, mask] = flat[:, mask] / T[mask]
    return q, mask


def informativeness(Q, Qprime, mask=None) -> bool:
    """True iff ``Qprime`` is at least as informative as ``Q``: some
    row-stochastic R with sum_o' q'(o'|i,j) r(o|o') = q(o|i,j)."""
    Q = np.asarray(Q, dtype=float)
    Qp = np.asarray(Qprime, dtype=float)
    if Q.ndim != 3 or Qp.ndim != 3 or Q.shape[1:] != Qp.shape[1:]:
        raise ValueError("observation arrays must be (outcomes, N, N) over the same states")
    O, Op = Q.shape[0], Qp.shape[0]
    mask = np.ones(Q.shape[1:], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    pairs = np.argwhere(mask)
    # variables r[o', o] flattened row-major
    rows, rhs = [], []
    for i, j in pairs:
        for o in range(O):
            a = np.zeros((Op, O))
            a[:, o] = Qp[:, i, j]
            rows.append(a.ravel())
            rhs.append(Q[o, i, j])
    for op in range(Op):
        a = np.zeros((Op, O))
        a[op, :] = 1.0
        rows.append(a.ravel())
        rhs.append(1.0)
    res = solve_lp(np.zeros(Op * O), A_eq=np.array(rows), b_eq=np.array(rhs))
    return res.optimal


def models_informativeness(model_q: ModelSpec, model_qprime: ModelSpec) -> bool:
    q, m1 = observation_array(model_q)
    qp, m2 = observation_array(model_qprime)
    return informativeness(q, qp, m1 & m2)


def bound_chain(model: ModelSpec, X, S, n: int, delta: int | None = None):
    """(lower, shifted, upper) at every (x, s) pair of the rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    S = np.asarray(S, dtype=float)
    low = lower_bound_vL(model, n).value(X)
    if delta is None:
        delta = min_delta(model)
    prepared = tighter_lower_sets(model, delta, n)
    mid = tighter_lower_vprime(model, delta, n, X, S, prepared=prepared)
    up = myopic_tree_value(model, X, S, n)
    return low, mid, up


def check_query(model: ModelSpec, x) -> tuple[np.ndarray, int]:
    x = check_belief(x, model.N)
    return x, myopic_base_stock(model, x)
