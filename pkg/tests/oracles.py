"""Brute-force reference computations used by the tests.

None of these share code paths with the package beyond the model object.
"""

import math
from itertools import product

import numpy as np

from beliefstock.model import ModelSpec, build_factored, CostParams


def direct_cost(model, x, y):
    """Expected one-period cost straight from the joint kernel."""
    tot = 0.0
    for k, d in enumerate(model.demands):
        for z in range(model.Z):
            sig = float(x @ model.joint[k, z].sum(axis=1))
            tot += sig * (model.p * max(d - y, 0) + model.h * max(y - d, 0))
    return tot


def children(model, x):
    for k in range(model.M):
        for z in range(model.Z):
            u = x @ model.joint[k, z]
            sig = u.sum()
            if sig > 1e-12:
                yield k, sig, u / sig


def dp_order_up_to(model, x, s, n, levels):
    """Optimal n-period cost with K = 0, ordering up to any level in ``levels``
    (or keeping stock), by exhaustive recursion over the outcome tree."""
    return dp_order_up_to_many(model, x, [s], n, levels)[s]


def dp_order_up_to_many(model, x, S, n, levels):
    """Same as :func:`dp_order_up_to` for every starting inventory in ``S``,
    sharing one walk of the tree.  Returns {s: value}."""
    if n == 0:
        return {s: 0.0 for s in S}
    levels = sorted(set(levels))
    ys = sorted(set(S) | set(levels))
    G = {y: direct_cost(model, x, y) for y in ys}
    for k, sig, post in children(model, x):
        d = model.demands[k]
        sub = dp_order_up_to_many(model, post, {y - d for y in ys}, n - 1, levels)
        for y in ys:
            G[y] += model.beta * sig * sub[y - d]
    return {s: min([G[s]] + [G[y] for y in levels if y >= s]) for s in S}


def myopic_level(model, x):
    cum = 0.0
    cr = model.p / (model.p + model.h)
    for k, d in enumerate(model.demands):
        cum += float(x @ model.joint[k].sum(axis=(0, 2)))
        if cum >= cr - 1e-12:
            return int(d)
    return int(model.demands[-1])


def dp_fixed_cost(model, x, n, lo, hi):
    """n-period optimal cost over inventory states lo..hi with reorder cost K.

    Returns an array indexed by s - lo.  States leaving the grid are clamped,
    which is exact when lo is below every reorder point."""
    S = np.arange(lo, hi + 1)
    if n == 0:
        return np.zeros(len(S))
    kids = [(k, sig, dp_fixed_cost(model, post, n - 1, lo, hi)) for k, sig, post in children(model, x)]
    G = np.empty(len(S))
    for a, y in enumerate(S):
        v = direct_cost(model, x, y)
        for k, sig, vk in kids:
            nxt = min(max(y - model.demands[k], lo), hi)
            v += model.beta * sig * vk[nxt - lo]
        G[a] = v
    out = np.empty(len(S))
    for a in range(len(S)):
        later = G[a + 1:]
        out[a] = min(G[a], model.K + later.min()) if later.size else G[a]
    return out


def random_model(rng, N=2, M=3, Z=1, K=0.0, beta=None, max_step=3, d1=None):
    d0 = int(rng.integers(0, 3)) if d1 is None else d1
    demands = d0 + np.cumsum(rng.integers(1, max_step + 1, M)) - 1
    P = rng.dirichlet(np.ones(N), N)
    QD = rng.dirichlet(np.ones(M), N)
    RZ = rng.dirichlet(np.ones(Z), N) if Z > 1 else None
    joint = build_factored(P, QD, RZ, renormalize=False)
    costs = CostParams(float(rng.uniform(1, 4)), float(rng.uniform(0.5, 2)), K,
                       float(rng.uniform(0.3, 0.9)) if beta is None else beta)
    return ModelSpec(demands, joint, costs)


def vertex_lp(c, A, b):
    """max c @ x over the simplex with A x <= b by enumerating vertices."""
    N = len(c)
    A = np.atleast_2d(A).reshape(-1, N)
    rows = [np.ones(N)] + list(A) + list(-np.eye(N))
    rhs = [1.0] + list(b) + [0.0] * N
    best = -math.inf
    for combo in product(range(1, len(rows)), repeat=N - 1):
        if len(set(combo)) != N - 1 or list(combo) != sorted(combo):
            continue
        Ms = np.array([rows[0]] + [rows[i] for i in combo])
        r = np.array([rhs[0]] + [rhs[i] for i in combo])
        try:
            x = np.linalg.solve(Ms, r)
        except np.linalg.LinAlgError:
            continue
        if np.all(x >= -1e-9) and np.all(A @ x <= np.asarray(b) + 1e-9):
            best = max(best, float(c @ x))
    return best
