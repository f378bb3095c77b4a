"""Value functions as minima of linear functions of the belief.

A :class:`GammaSet` holds rows ``g`` with ``v(x) = min_g x @ g``.  Under
attainability the optimal cost with inventory at or below the myopic level
is represented exactly this way, and the same recursion gives a lower bound
on the optimal cost when attainability fails.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .belief import posteriors
from .errors import ResourceLimitError
from .lp import solve_lp
from .model import ModelSpec
from .single_period import cost_vectors, myopic_index

EQUAL_TOL = 1e-10
WITNESS_TOL = 1e-9
DEFAULT_CAP = 10**7
DEFAULT_MAX_VECTORS = 50_000
TREE_CAP = 5_000_000


@dataclass(frozen=True)
class GammaSet:
    vectors: np.ndarray
    horizon: int

    def __post_init__(self):
        V = np.array(self.vectors, dtype=float, ndmin=2)
        V.setflags(write=False)
        object.__setattr__(self, "vectors", V)

    def __len__(self):
        return len(self.vectors)

    @property
    def N(self) -> int:
        return self.vectors.shape[1]

    def value(self, X):
        X = np.asarray(X, dtype=float)
        v = (np.atleast_2d(X) @ self.vectors.T).min(axis=1)
        return float(v[0]) if X.ndim == 1 else v

    def best(self, X):
        X = np.asarray(X, dtype=float)
        i = np.argmin(np.atleast_2d(X) @ self.vectors.T, axis=1)
        return int(i[0]) if X.ndim == 1 else i

    def to_csv(self) -> str:
        return gammas_to_csv([self])


def gammas_to_csv(sets) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    N = sets[0].N
    w.writerow(["horizon", *[f"gamma_{i + 1}" for i in range(N)]])
    for G in sets:
        for g in G.vectors:
            w.writerow([G.horizon, *[repr(float(v)) for v in g]])
    return buf.getvalue()


def zero_set(N: int) -> GammaSet:
    return GammaSet(np.zeros((1, N)), 0)


# probes

def lattice_probes(N: int, den: int) -> np.ndarray:
    """All beliefs with coordinates in {0, 1/den, ..., 1}."""
    if N == 1:
        return np.ones((1, 1))
    pts = []
    for bars in combinations_with_replacement(range(den + 1), N - 1):
        c = np.diff(np.r_[0, bars, den])
        pts.append(c)
    return np.array(pts, dtype=float) / den


def probe_grid(N: int, seed: int = 0) -> np.ndarray:
    """Convergence probes: a fine lattice for small N, random draws otherwise."""
    if N == 2:
        return lattice_probes(2, 1000)
    if N <= 4:
        return lattice_probes(N, 100)
    rng = np.random.default_rng(seed)
    return np.vstack([np.eye(N), rng.dirichlet(np.ones(N), 10_000)])


# pruning

def _dedup(V: np.ndarray, tol: float) -> np.ndarray:
    if len(V) <= 1:
        return V
    key = np.round(V / tol).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    return V[np.sort(first)]


def _pointwise_undominated(V: np.ndarray, tol: float) -> np.ndarray:
    """Indices of rows not componentwise dominated by another row."""
    K = len(V)
    keep = np.ones(K, dtype=bool)
    order = np.argsort(V.sum(axis=1), kind="stable")
    V = V[order]
    chunk = max(1, 4_000_000 // max(1, K * V.shape[1]))
    for lo in range(0, K, chunk):
        hi = min(K, lo + chunk)
        # D[a, b]: row a <= row b (+tol) everywhere, a earlier in sum order
        D = np.all(V[:, None, :] <= V[None, lo:hi, :] + tol, axis=2)
        idx = np.arange(lo, hi)
        D[idx, idx - lo] = False
        # only earlier rows (smaller sum) can dominate, breaking near-ties by order
        D &= np.arange(K)[:, None] < idx[None, :]
        keep[lo:hi] = ~D.any(axis=0)
    return np.sort(order[keep])


def _hull_candidates(V: np.ndarray) -> np.ndarray | None:
    """Rows that are vertices of the lower hull of the lifted points; only these
    can be minimal anywhere on the affine hull of the simplex.  ``None`` when
    the hull is degenerate or unavailable."""
    K, N = V.shape
    if N < 2 or N > 6 or K <= N + 1:
        return None
    try:
        from scipy.spatial import ConvexHull, QhullError
    except ImportError:  # pragma: no cover
        return None
    # f(u) = g_N + sum_{i<N} u_i (g_i - g_N); lift to (g_i - g_N, g_N)
    P = np.column_stack([V[:, :-1] - V[:, -1:], V[:, -1]])
    scale = np.abs(P).max(axis=0)
    scale[scale == 0] = 1.0
    try:
        hull = ConvexHull(P / scale)
    except (QhullError, ValueError):
        return None
    lower = hull.equations[:, N - 1] < -1e-12
    cand = [hull.simplices[lower].ravel()]
    # points qhull set aside as coplanar may still be (barely) extreme
    if len(hull.coplanar):
        cop = hull.coplanar
        cand.append(cop[lower[cop[:, 1]], 0])
    return np.unique(np.concatenate(cand))


def _witness(g: np.ndarray, W: np.ndarray, tol: float):
    """A belief at which ``g`` beats every row of ``W`` by more than ``tol``."""
    N = g.size
    A = np.hstack([g[None, :] - W, np.ones((len(W), 1))])
    A = np.vstack([A, np.r_[np.zeros(N), 1.0]])
    b = np.r_[np.zeros(len(W)), 1.0]
    res = solve_lp(np.r_[np.zeros(N), 1.0], A, b, simplex=True, free=[N], maximize=True)
    if res.optimal and res.value > tol:
        return res.x[:N]
    return None


_SEED_CACHE: dict[int, np.ndarray] = {}


def _seed_probes(N: int) -> np.ndarray:
    if N not in _SEED_CACHE:
        if N <= 4:
            den = {1: 1, 2: 64, 3: 24, 4: 10}[N]
            _SEED_CACHE[N] = lattice_probes(N, den)
        else:
            rng = np.random.default_rng(12345)
            _SEED_CACHE[N] = np.vstack([np.eye(N), rng.dirichlet(np.ones(N), 500)])
    return _SEED_CACHE[N]


def prune_vectors(V, *, tol: float = EQUAL_TOL, witness_tol: float = WITNESS_TOL) -> np.ndarray:
    """Drop rows that are not strictly minimal at some belief.

    Duplicates and componentwise-dominated rows go first, then a lower-hull
    filter (small N), then an LP witness search seeded with the winners at a
    fixed set of probe beliefs.
    """
    V = np.array(V, dtype=float, ndmin=2)
    if len(V) == 0:
        raise ValueError("cannot prune an empty set")
    N = V.shape[1]
    V = _dedup(V, tol)
    V = V[_pointwise_undominated(V, tol)]
    if len(V) <= 1 or N == 1:
        return V[np.argmin(V[:, 0])][None, :] if N == 1 else V
    hc = _hull_candidates(V)
    if hc is not None:
        V = V[hc]
    probes = _seed_probes(N)
    vals = probes @ V.T
    top = np.argmin(vals, axis=1)
    two = np.partition(vals, 1, axis=1)[:, :2]
    win = np.unique(top[two[:, 1] - two[:, 0] > witness_tol])
    kept = list(win)
    rest = [i for i in range(len(V)) if i not in set(win)]
    while rest:
        i = rest.pop(0)
        x = _witness(V[i], V[kept], witness_tol)
        if x is None:
            continue
        # the best remaining row at the witness is certainly useful
        cand = np.array([i, *rest])
        j = int(cand[np.argmin(V[cand] @ x)])
        kept.append(j)
        if j != i:
            rest.remove(j)
            rest.insert(0, i)
    return V[np.sort(kept)]


def prune(G: GammaSet, **kw) -> GammaSet:
    return GammaSet(prune_vectors(G.vectors, **kw), G.horizon)


# recursion

def gamma_initial(model: ModelSpec) -> GammaSet:
    """One-period costs at every demand level as order-up-to target."""
    return GammaSet(prune_vectors(cost_vectors(model, model.demands)), 1)


def continuation_blocks(model: ModelSpec, V: np.ndarray):
    """For every possible outcome, the discounted images beta P(d,z) g of the rows."""
    out = []
    for k in range(model.M):
        for z in range(model.Z):
            J = model.joint[k, z]
            if not J.any():
                continue
            out.append(model.beta * (V @ J.T))
    return out


def cross_sum(A: np.ndarray, blocks, *, cap: int = DEFAULT_CAP,
              max_vectors: int = DEFAULT_MAX_VECTORS) -> np.ndarray:
    """Pruned Minkowski sum A + B_1 + B_2 + ..., pruning after each term."""
    acc = A
    for B in blocks:
        B = prune_vectors(B)
        size = len(acc) * len(B)
        if size > cap:
            raise ResourceLimitError(
                f"cross-sum of {len(acc)} x {len(B)} vectors exceeds cap {cap}; use a smaller horizon")
        acc = prune_vectors((acc[:, None, :] + B[None, :, :]).reshape(-1, acc.shape[1]))
        if len(acc) > max_vectors:
            raise ResourceLimitError(
                f"pruned set has {len(acc)} vectors (limit {max_vectors}); use a smaller horizon")
    return acc


def gamma_step(model: ModelSpec, G: GammaSet, G1: GammaSet | None = None, *,
               cap: int = DEFAULT_CAP, max_vectors: int = DEFAULT_MAX_VECTORS) -> GammaSet:
    if G1 is None:
        G1 = gamma_initial(model)
    if model.beta == 0.0:
        return GammaSet(G1.vectors, G.horizon + 1)
    V = cross_sum(G1.vectors, continuation_blocks(model, G.vectors), cap=cap, max_vectors=max_vectors)
    return GammaSet(V, G.horizon + 1)


def solve_finite(model: ModelSpec, n: int, **kw) -> list[GammaSet]:
    """[G_0, G_1, ..., G_n] with G_0 = {0}."""
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    out = [zero_set(model.N)]
    if n == 0:
        return out
    G1 = gamma_initial(model)
    out.append(G1)
    for _ in range(2, n + 1):
        out.append(gamma_step(model, out[-1], G1, **kw))
    return out


@dataclass
class InfiniteReport:
    gamma: GammaSet
    iterations: int
    last_change: float
    threshold: float
    epsilon: float
    probes: int
    converged: bool
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "vectors": len(self.gamma),
            "last_change": self.last_change,
            "threshold": self.threshold,
            "epsilon": self.epsilon,
            "probe_points": self.probes,
            "converged": self.converged,
            "certificate": "sup-norm error <= epsilon on the probe grid only",
        }


def solve_infinite(model: ModelSpec, epsilon: float, *, max_iter: int = 500,
                   cap: int = DEFAULT_CAP, max_vectors: int = DEFAULT_MAX_VECTORS,
                   seed: int = 0) -> InfiniteReport:
    """Iterate until the probe-grid change is at most eps (1 - beta) / (2 beta)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    G1 = gamma_initial(model)
    probes = probe_grid(model.N, seed)
    if model.beta == 0.0:
        return InfiniteReport(G1, 1, 0.0, 0.0, epsilon, len(probes), True)
    thr = epsilon * (1 - model.beta) / (2 * model.beta)
    G, prev = G1, G1.value(probes)
    hist = []
    for it in range(2, max_iter + 1):
        G = gamma_step(model, G, G1, cap=cap, max_vectors=max_vectors)
        cur = G.value(probes)
        change = float(np.max(np.abs(cur - prev)))
        hist.append(change)
        prev = cur
        if change <= thr:
            return InfiniteReport(G, it, change, thr, epsilon, len(probes), True, hist)
    return InfiniteReport(G, max_iter, hist[-1] if hist else 0.0, thr, epsilon, len(probes), False, hist)


# evaluation along the myopic policy

def myopic_tree_value(model: ModelSpec, X, S, n: int, gammas=None, *, cap: int = TREE_CAP,
                      reset: bool = False) -> np.ndarray:
    """Expected discounted n-period cost of ordering up to max(s, s*(x)).

    The outcome tree is expanded exactly.  When ``gammas`` (indexed by
    remaining horizon) is given, a node whose inventory is at or below its
    myopic level is closed with the set's value for the remaining horizon;
    that is exact when attainability holds.  With ``reset`` every period
    starts from the myopic level regardless of leftover stock, which is the
    lower-bound recursion.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    S = np.broadcast_to(np.asarray(S, dtype=float), (len(X),)).copy()
    if n <= 0:
        return np.zeros(len(X))
    branching = max(1, int(np.count_nonzero(model.outcome_rows.max(axis=2) > 0)))
    per_root = float(branching) ** (n - 1)
    step = int(max(1, min(len(X), cap // per_root))) if per_root < cap else 1
    out = np.empty(len(X))
    for lo in range(0, len(X), step):
        out[lo:lo + step] = _tree_batch(model, X[lo:lo + step], S[lo:lo + step], n, gammas, cap, reset)
    return out


def _tree_batch(model, X, S, n, gammas, cap, reset):
    total = np.zeros(len(X))
    owner = np.arange(len(X))
    w = np.ones(len(X))
    d = model.demands.astype(float)
    for level in range(n):
        rem = n - level
        idx = myopic_index(model, X)
        sstar = model.demands[idx].astype(float)
        if gammas is not None and rem < len(gammas):
            close = S <= sstar
            if close.any():
                np.add.at(total, owner[close], w[close] * gammas[rem].value(X[close]))
                keep = ~close
                X, S, w, owner, sstar = X[keep], S[keep], w[keep], owner[keep], sstar[keep]
                if len(X) == 0:
                    break
        y = np.maximum(S, sstar)
        Lv = np.einsum("bi,bi->b", X, _cost_rows(model, y))
        np.add.at(total, owner, w * Lv)
        if rem == 1:
            break
        sig, post = posteriors(model, X)
        nb, kk, zz = np.nonzero(sig > 0)
        if len(nb) > cap:
            raise ResourceLimitError(f"outcome tree reached {len(nb)} nodes (cap {cap})")
        X = post[nb, kk, zz]
        S = np.full(len(nb), -np.inf) if reset else y[nb] - d[kk]
        w = w[nb] * model.beta * sig[nb, kk, zz]
        owner = owner[nb]
    return total


def _cost_rows(model: ModelSpec, y: np.ndarray) -> np.ndarray:
    """Per-node cost vectors for order-up-to levels ``y`` (shape (B, N))."""
    C = model.p * np.maximum(model.demands[None, :] - y[:, None], 0.0) \
        + model.h * np.maximum(y[:, None] - model.demands[None, :], 0.0)
    return C @ model.demand_rows


def value_full(model: ModelSpec, gammas, x, s, n: int | None = None):
    """Optimal n-period cost at (belief, inventory) under attainability.

    ``gammas`` is the list from :func:`solve_finite`; ``n`` defaults to its
    last horizon.  At or below the myopic level this is the set's value;
    above it the policy orders nothing and the tree is expanded until the
    inventory falls back to the posterior myopic level.
    """
    if n is None:
        n = len(gammas) - 1
    if n >= len(gammas):
        raise ValueError(f"need value sets up to horizon {n}, have {len(gammas) - 1}")
    X = np.asarray(x, dtype=float)
    out = myopic_tree_value(model, np.atleast_2d(X), s, n, gammas)
    return float(out[0]) if X.ndim == 1 else out
