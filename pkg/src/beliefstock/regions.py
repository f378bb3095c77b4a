"""Cells of the belief simplex described by finitely many linear inequalities."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Iterable, Sequence

import numpy as np

from .lp import solve_lp

MEMBER_SLACK = 1e-12
# interior slack below this is treated as "touches only the boundary"
INTERIOR_TOL = 1e-10


@dataclass(frozen=True)
class Inequality:
    """``a @ x < b`` when strict, else ``a @ x <= b``."""
    a: np.ndarray
    b: float
    strict: bool = False

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    @property
    def relation(self) -> str:
        return "<" if self.strict else "<="

    def holds(self, X) -> np.ndarray | bool:
        v = np.asarray(X) @ self.a
        if self.strict:
            return v < self.b - MEMBER_SLACK
        return v <= self.b + MEMBER_SLACK

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "relation": self.relation, "b": self.b}


@dataclass(frozen=True)
class Region:
    inequalities: tuple[Inequality, ...]
    label: Any
    meta: dict = field(default_factory=dict, compare=False)

    def contains(self, X) -> np.ndarray | bool:
        X = np.asarray(X, dtype=float)
        out = np.ones(X.shape[:-1], dtype=bool)
        for ineq in self.inequalities:
            out &= ineq.holds(X)
        return out if X.ndim > 1 else bool(out)

    def constraint_arrays(self):
        N = self.dim
        if not self.inequalities:
            return np.zeros((0, N)), np.zeros(0), np.zeros(0, dtype=bool)
        A = np.array([q.a for q in self.inequalities])
        b = np.array([q.b for q in self.inequalities])
        s = np.array([q.strict for q in self.inequalities])
        return A, b, s

    @property
    def dim(self) -> int:
        if self.inequalities:
            return self.inequalities[0].a.size
        return int(self.meta.get("N", 0))

    def to_dict(self) -> dict:
        return {"label": _plain(self.label),
                "inequalities": [q.to_dict() for q in self.inequalities]}


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def interior_slack(A, b, strict, N: int) -> tuple[float, np.ndarray | None]:
    """Largest ``t <= 1`` with ``A x + t <= b`` on strict rows, ``A x <= b`` on
    weak rows, over the simplex.  Returns ``(-inf, None)`` if even the closure
    is empty."""
    A = np.asarray(A, dtype=float).reshape(-1, N)
    b = np.asarray(b, dtype=float).ravel()
    strict = np.asarray(strict, dtype=bool).ravel()
    # variables: x (N, nonnegative, on simplex) and t (free, capped at 1)
    Aub = np.hstack([A, strict[:, None].astype(float)])
    Aub = np.vstack([Aub, np.r_[np.zeros(N), 1.0]])
    bub = np.r_[b, 1.0]
    c = np.r_[np.zeros(N), 1.0]
    res = solve_lp(c, Aub, bub, simplex=True, free=[N], maximize=True)
    if not res.optimal:
        return float("-inf"), None
    return res.value, res.x[:N]


def region_status(region: Region, N: int) -> str:
    """``interior`` if the region has a point meeting strict rows with slack,
    ``boundary`` if only its closure is nonempty, ``empty`` otherwise."""
    A, b, s = region.constraint_arrays()
    t, _ = interior_slack(A, b, s, N)
    if t == float("-inf"):
        return "empty"
    if not s.any() or t > INTERIOR_TOL:
        return "interior"
    return "boundary"


def is_nonempty(region: Region, N: int) -> bool:
    return region_status(region, N) == "interior"


def witness_point(region: Region, N: int) -> np.ndarray | None:
    """A point of the region, as deep inside the strict rows as possible."""
    A, b, s = region.constraint_arrays()
    t, x = interior_slack(A, b, s, N)
    if x is None or (s.any() and t <= INTERIOR_TOL):
        return None
    return x


def polygon_vertices(region: Region, N: int = 3, tol: float = 1e-9) -> np.ndarray:
    """Vertices (barycentric, counter-clockwise) of the closure of a region of
    the 2-simplex.  Empty array if the closure is a point set of measure zero
    or empty."""
    if N != 3:
        raise ValueError("polygon export is only defined for N=3")
    A, b, _ = region.constraint_arrays()
    # all constraints in the plane x1 + x2 + x3 = 1, with x >= 0
    rows = np.vstack([A, -np.eye(3)]) if len(A) else -np.eye(3)
    rhs = np.r_[b, np.zeros(3)] if len(A) else np.zeros(3)
    pts = []
    for i, j in combinations(range(len(rows)), 2):
        M = np.vstack([rows[i], rows[j], np.ones(3)])
        if abs(np.linalg.det(M)) < 1e-14:
            continue
        x = np.linalg.solve(M, np.r_[rhs[i], rhs[j], 1.0])
        if np.all(rows @ x <= rhs + tol):
            pts.append(x)
    if len(pts) < 3:
        return np.zeros((0, 3))
    P = np.array(pts)
    P[np.abs(P) < tol] = 0.0
    P = P[np.unique(np.round(P, 9), axis=0, return_index=True)[1]]
    if len(P) < 3:
        return np.zeros((0, 3))
    xy = barycentric_to_xy(P)
    c = xy.mean(axis=0)
    order = np.argsort(np.arctan2(xy[:, 1] - c[1], xy[:, 0] - c[0]))
    return P[order]


def barycentric_to_xy(P: np.ndarray) -> np.ndarray:
    """Map 2-simplex points to the plane triangle (0,0), (1,0), (1/2, sqrt(3)/2)."""
    P = np.atleast_2d(P)
    return np.column_stack([P[:, 1] + 0.5 * P[:, 2], (np.sqrt(3) / 2) * P[:, 2]])


def polygon_area(P: np.ndarray) -> float:
    if len(P) < 3:
        return 0.0
    xy = barycentric_to_xy(P)
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def label_text(label) -> str:
    if isinstance(label, dict):
        return "(" + ",".join(str(_plain(v)) for v in label.values()) + ")"
    if isinstance(label, (tuple, list)):
        return "(" + ",".join(str(_plain(v)) for v in label) + ")"
    return str(_plain(label))


def regions_to_csv(regions: Iterable[Region], N: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", *[f"a_{i + 1}" for i in range(N)], "relation", "b"])
    for r in regions:
        for q in r.inequalities:
            w.writerow([label_text(r.label), *[repr(float(v)) for v in q.a], q.relation, repr(q.b)])
    return buf.getvalue()


def regions_to_polygons(regions: Sequence[Region], N: int = 3) -> list[dict]:
    out = []
    for r in regions:
        P = polygon_vertices(r, N)
        out.append({
            "label": _plain(r.label),
            "vertices": P.tolist(),
            "xy": barycentric_to_xy(P).tolist() if len(P) else [],
            "area": polygon_area(P),
        })
    return out
