"""One-period newsvendor quantities as functions of the belief.

With backlogging, ordering up to ``y`` and then seeing demand ``d`` costs
``p (d - y)^+ + h (y - d)^+`` and leaves inventory ``y - d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import solve_lp
from .model import ModelSpec
from .regions import Inequality, Region, is_nonempty

SCAN_SLACK = 1e-12


def period_cost(y, d, p: float, h: float):
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    return p * np.maximum(d - y, 0.0) + h * np.maximum(y - d, 0.0)


def next_inventory(y, d):
    return y - d


@dataclass(frozen=True)
class FacetCoefficients:
    """L(x, y) = A[m] y + B[m] for demands[m-1] <= y <= demands[m]."""
    A: np.ndarray
    B: np.ndarray

    def value(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.max(self.A[:, None] * y.ravel()[None, :] + self.B[:, None], axis=0).reshape(y.shape)


def facet_coefficients(model: ModelSpec, x) -> FacetCoefficients:
    sig = np.asarray(x, dtype=float) @ model.demand_rows.T
    d = model.demands.astype(float)
    below = np.r_[0.0, np.cumsum(sig)]            # mass at or below d_m, m=0..M
    below_d = np.r_[0.0, np.cumsum(sig * d)]
    above, above_d = below[-1] - below, below_d[-1] - below_d
    A = model.h * below - model.p * above
    B = -model.h * below_d + model.p * above_d
    # pin the end slopes exactly
    A[0], A[-1] = -model.p, model.h
    return FacetCoefficients(A, B)


def cost_vector(model: ModelSpec, y) -> np.ndarray:
    """Per-state expected one-period cost at order-up-to ``y``: L(x, y) = x @ cost_vector."""
    return model.demand_rows.T @ period_cost(y, model.demands, model.p, model.h)


def cost_vectors(model: ModelSpec, ys) -> np.ndarray:
    """Stacked cost vectors, shape (len(ys), N)."""
    ys = np.asarray(ys, dtype=float).ravel()
    C = period_cost(ys[:, None], model.demands[None, :], model.p, model.h)
    return C @ model.demand_rows


def expected_cost_L(model: ModelSpec, x, y) -> float:
    """Expected one-period cost from the max-of-facets form."""
    return float(facet_coefficients(model, x).value(np.asarray([y], dtype=float))[0])


def expected_cost_batch(model: ModelSpec, X, ys) -> np.ndarray:
    """L(x, y) for each row of ``X`` and each entry of ``ys``; shape (B, len(ys))."""
    return np.atleast_2d(X) @ cost_vectors(model, ys).T


def cumulative_rows(model: ModelSpec) -> np.ndarray:
    """Row m holds sum_{k<=m} P(d_k) 1, so x @ row = Pr(demand <= d_m)."""
    return np.cumsum(model.demand_rows, axis=0)


def myopic_index(model: ModelSpec, X) -> np.ndarray | int:
    """Index of the myopic base stock level: the first m whose cumulative
    demand probability reaches the critical ratio."""
    X = np.asarray(X, dtype=float)
    cum = X @ cumulative_rows(model).T
    hit = cum >= model.costs.critical_ratio - SCAN_SLACK
    hit[..., -1] = True
    idx = np.argmax(hit, axis=-1)
    return int(idx) if X.ndim == 1 else idx


def myopic_base_stock(model: ModelSpec, X):
    idx = myopic_index(model, X)
    return int(model.demands[idx]) if np.ndim(idx) == 0 else model.demands[idx]


def p1_region(model: ModelSpec, m: int) -> Region:
    """Beliefs whose myopic level is ``demands[m]``: strictly below the
    critical ratio through d_{m-1}, at or above it through d_m."""
    C = cumulative_rows(model)
    cr = model.costs.critical_ratio
    ineqs = []
    if m > 0:
        ineqs.append(Inequality(C[m - 1], cr, strict=True))
    if m < model.M - 1:
        ineqs.append(Inequality(-C[m], -cr))
    return Region(tuple(ineqs), int(model.demands[m]), meta={"m": m, "N": model.N})


def partition_p1(model: ModelSpec) -> list[Region]:
    """Nonempty regions of constant myopic base stock."""
    return [r for r in (p1_region(model, m) for m in range(model.M)) if is_nonempty(r, model.N)]


def myopic_range(model: ModelSpec) -> tuple[int, int]:
    """(min, max) of the myopic base stock over the simplex.

    The cumulative probabilities are linear in x, so both extremes occur at
    vertices."""
    levels = myopic_base_stock(model, np.eye(model.N))
    return int(levels.min()), int(levels.max())


def max_myopic_cost(model: ModelSpec) -> float:
    """max over x of L(x, s*(x)) = max_x min_y x @ cost_vector(y), one LP."""
    G = cost_vectors(model, model.demands)
    N = model.N
    # maximize t subject to t <= x @ g for every g
    A = np.hstack([-G, np.ones((len(G), 1))])
    res = solve_lp(np.r_[np.zeros(N), 1.0], A, np.zeros(len(G)),
                   simplex=True, free=[N], maximize=True)
    return float(res.value)
