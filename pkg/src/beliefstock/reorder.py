"""Fixed ordering cost: (s, S) bounds, their belief partition, and exact
finite-horizon (s, S) policies from inventory-indexed Γ-set families.

For a belief x write ``L(y) = L(x, y)`` and ``S_lo`` for the myopic level.
The four bounds are the smallest levels with

* ``s_lo``:  L(s_lo) <= K + L(S_lo)
* ``s_up``:  L(s_up) <= (1 - beta) K + L(S_lo)
* ``S_up``:  L(S_up) >= beta K + L(S_lo), S_up >= S_lo

Every condition is linear in x for fixed levels, so the set of beliefs with
a given 4-tuple is a polytope cut out of a myopic region.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .assumptions import check_a1
from .belief import check_belief
from .errors import AssumptionError, ModelError, ResourceLimitError
from .gamma import DEFAULT_MAX_VECTORS, GammaSet, cross_sum, prune_vectors
from .model import ModelSpec
from .regions import INTERIOR_TOL, Inequality, Region, interior_slack
from .single_period import cost_vectors, myopic_index, p1_region, partition_p1

SLACK = 1e-12
TIE_TOL = 1e-9
DEFAULT_SS_DEPTH = 6


@dataclass(frozen=True)
class SSBounds:
    s_lower: int
    s_upper: int
    S_lower: int
    S_upper: int
    indices: tuple = ()
    region: Region | None = None

    @property
    def label(self) -> tuple:
        return (self.s_lower, self.s_upper, self.S_lower, self.S_upper)

    def to_dict(self) -> dict:
        return {"sl": self.s_lower, "su": self.s_upper, "Sl": self.S_lower, "Su": self.S_upper}


def _require_k(model: ModelSpec):
    if model.K <= 0:
        raise ModelError("(s, S) bounds need a positive reorder cost K")


def level_window(model: ModelSpec) -> tuple[int, int]:
    """Integers outside [lo, hi] can never be one of the bounds."""
    d = model.demands
    lo = math.floor(d[0] - model.K / model.p) - 1
    hi = math.ceil(d[-1] + model.K / model.h) + 1
    return int(lo), int(hi)


def _levels(model: ModelSpec, grid: bool):
    """Candidate levels for the lower pair and for S_up (ascending)."""
    d = [int(v) for v in model.demands]
    if grid:
        top = d[-1] + math.ceil(model.beta * model.K / model.h)
        return d, d + list(range(d[-1] + 1, top + 1))
    lo, hi = level_window(model)
    r = list(range(lo, hi + 1))
    return r, r


def ss_bounds(model: ModelSpec, x, *, grid: bool = True) -> SSBounds:
    """The four bounds at one belief.

    With ``grid`` the lower three are demand values and S_up leaves the
    demand grid only when no demand value qualifies; otherwise all four are
    plain integers."""
    _require_k(model)
    x = check_belief(x, model.N)
    K, beta = model.K, model.beta
    low_levels, up_levels = _levels(model, grid)
    m = myopic_index(model, x)
    Sl = int(model.demands[m])
    Ls = float(x @ cost_vectors(model, [Sl])[0])
    Llow = cost_vectors(model, low_levels) @ x
    i = int(np.argmax(Llow <= K + Ls + SLACK))
    j = int(np.argmax(Llow <= (1 - beta) * K + Ls + SLACK))
    ups = [v for v in up_levels if v >= Sl]
    Lup = cost_vectors(model, ups) @ x
    hit = Lup >= beta * K + Ls - SLACK
    if not hit.any():
        raise ResourceLimitError("upper reorder bound outside the search window")
    n = int(np.argmax(hit))
    idx = (i + 1, j + 1, m + 1, _up_index(model, ups[n])) if grid else ()
    return SSBounds(low_levels[i], low_levels[j], Sl, ups[n], idx)


def _up_index(model: ModelSpec, level: int):
    d = model.demands
    hit = np.nonzero(d == level)[0]
    return int(hit[0]) + 1 if hit.size else f">{model.M}"


def _first_rows(G, idx: int, g_s, thr: float):
    """Level ``idx`` is the first with L <= thr + L(S_lo)."""
    rows = [(G[idx] - g_s, thr, False)]
    if idx > 0:
        rows.append((g_s - G[idx - 1], -thr, True))
    return rows


def _up_rows(G_up, n: int, thr: float):
    """Level ``n`` (counted from S_lo) is the first with L >= thr + L(S_lo)."""
    rows = [(G_up[0] - G_up[n], -thr, False)]
    if n > 1:
        rows.append((G_up[n - 1] - G_up[0], thr, True))
    return rows


def _feasible(rows, N: int) -> bool:
    if not rows:
        return True
    A = np.array([r[0] for r in rows])
    b = np.array([r[1] for r in rows])
    s = np.array([r[2] for r in rows])
    t, _ = interior_slack(A, b, s, N)
    return t > INTERIOR_TOL


def ss_partition(model: ModelSpec, *, grid: bool = True) -> list[Region]:
    """Cells of constant (s_lo, s_up, S_lo, S_up).

    Myopic regions are refined by the s_lo rows, then s_up, then S_up,
    dropping infeasible branches early.  Cells without interior points are
    dropped."""
    _require_k(model)
    K, beta, N = model.K, model.beta, model.N
    low_levels, up_levels = _levels(model, grid)
    G_low = cost_vectors(model, low_levels)

    def run(reg):
        m = reg.meta["m"]
        Sl = int(model.demands[m])
        base = [(q.a, q.b, q.strict) for q in reg.inequalities]
        ups = [v for v in up_levels if v >= Sl]
        G_up = cost_vectors(model, ups)
        g_s = G_up[0]
        lows = [k for k, v in enumerate(low_levels) if v <= Sl]
        out = []
        for i in lows:
            r_i = base + _first_rows(G_low, i, g_s, K)
            if not _feasible(r_i, N):
                continue
            for j in lows:
                if j < i:
                    continue
                r_ij = r_i + _first_rows(G_low, j, g_s, (1 - beta) * K)
                if not _feasible(r_ij, N):
                    continue
                for n in range(1, len(ups)):
                    rows = r_ij + _up_rows(G_up, n, beta * K)
                    if not _feasible(rows, N):
                        continue
                    ineqs = tuple(Inequality(a, b, s) for a, b, s in rows)
                    label = (low_levels[i], low_levels[j], Sl, ups[n])
                    idx = (i + 1, j + 1, m + 1, _up_index(model, ups[n])) if grid else None
                    out.append(Region(ineqs, label, meta={"m": m, "indices": idx, "N": N}))
        return out

    cells = pmap(run, partition_p1(model))
    return [c for group in cells for c in group]


def locate(regions, x) -> Region | None:
    for r in regions:
        if r.contains(x):
            return r
    return None


def k_convexity_check(values, K: float, tol: float = 1e-9) -> bool:
    """g(b) <= ((c - b) g(a) + (b - a) (g(c) + K)) / (c - a) for all a < b < c."""
    g = np.asarray(values, dtype=float).ravel()
    n = g.size
    if n < 3:
        return True
    idx = np.arange(n)
    a, b, c = np.meshgrid(idx, idx, idx, indexing="ij")
    ok = (a < b) & (b < c)
    lhs = g[b] * (c - a)
    rhs = (c - b) * g[a] + (b - a) * (g[c] + K)
    return bool(np.all(lhs[ok] <= rhs[ok] + tol * (c - a)[ok] * max(1.0, np.abs(g).max())))


# exact finite horizon

@dataclass
class SSPolicy:
    """Finite-horizon values and (s, S) decisions with a fixed ordering cost.

    ``families[t][s]`` is the Γ-set of the t-period optimal cost at
    inventory s; ``gprime[y]`` holds the sets of the n-period cost-to-go
    after ordering up to y (the function minimized by the policy)."""
    model: ModelSpec
    horizon: int
    families: list
    gprime: dict
    window: tuple
    regions: list = field(default_factory=list)

    def _set(self, t: int, s: int) -> np.ndarray:
        fam = self.families[t]
        lo = min(fam)
        s = max(int(s), lo)   # ordering is forced below the window; value is flat there
        if s not in fam:
            raise ValueError(f"inventory {s} is above the computed window (max {max(fam)})")
        return fam[s]

    def value(self, x, s, t: int | None = None):
        """Optimal t-period cost at (x, s) (t defaults to the horizon)."""
        t = self.horizon if t is None else t
        X = np.asarray(x, dtype=float)
        V = self._set(t, s)
        v = (np.atleast_2d(X) @ V.T).min(axis=1)
        return float(v[0]) if X.ndim == 1 else v

    def levels(self) -> np.ndarray:
        return np.array(sorted(self.gprime))

    def G(self, x) -> np.ndarray:
        """Cost-to-go after ordering up to each level of :meth:`levels`."""
        X = np.atleast_2d(np.asarray(x, dtype=float))
        return np.stack([(X @ self.gprime[y].T).min(axis=1) for y in self.levels()], axis=1)

    def policy_at(self, x) -> dict:
        """(s_n, S_n) at one belief: S_n the smallest minimizer of G, s_n the
        smallest level with G(s_n) <= K + G(S_n)."""
        x = check_belief(x, self.model.N)
        ys = self.levels()
        g = self.G(x)[0]
        gmin = g.min()
        S = int(ys[np.argmax(g <= gmin + TIE_TOL)])
        thr = self.model.K + g[ys == S][0]
        s = int(ys[np.argmax(g <= thr + TIE_TOL)])
        return {"s": s, "S": S, "S_tie": int(np.sum(g <= gmin + TIE_TOL)) > 1,
                "s_tie": bool(abs(g[ys == s][0] - thr) <= TIE_TOL)}

    def action(self, x, s: int) -> dict:
        """Both branches of the ordering decision at (x, s); the cheaper wins
        and exact ties are flagged."""
        x = check_belief(x, self.model.N)
        ys = self.levels()
        g = self.G(x)[0]
        s = int(s)
        if s < ys[0]:
            keep = float("inf")
        elif s > ys[-1]:
            raise ValueError(f"inventory {s} is above the computed window (max {ys[-1]})")
        else:
            keep = float(g[ys == s][0])
        above = ys > s
        order = self.model.K + float(g[above].min()) if above.any() else float("inf")
        target = int(ys[above][np.argmin(g[above])]) if above.any() else s
        tie = abs(keep - order) <= TIE_TOL
        if order < keep:
            return {"order": True, "y": target, "cost": order, "tie": tie}
        return {"order": False, "y": s, "cost": keep, "tie": tie}

    def export(self, *, probes_per_region: int = 64, seed: int = 0) -> dict:
        """Partition cells with the (s_n, S_n) observed at seeded probes in
        each; ``exact`` is false when the probes disagree."""
        rng = np.random.default_rng(seed)
        regions = self.regions or ss_partition(self.model)
        out = []
        for reg in regions:
            A, b, st = reg.constraint_arrays()
            t, x0 = interior_slack(A, b, st, self.model.N)
            pts = [x0] if x0 is not None else []
            for x in rng.dirichlet(np.ones(self.model.N), probes_per_region * 8):
                if reg.contains(x):
                    pts.append(x)
                if len(pts) > probes_per_region:
                    break
            pols = {(p["s"], p["S"]) for p in (self.policy_at(x) for x in pts)}
            s_n, S_n = min(pols)
            out.append({
                "inequalities": [q.to_dict() for q in reg.inequalities],
                "label": dict(zip(("sl", "su", "Sl", "Su"), (int(v) for v in reg.label))),
                "policy": {"s_n": int(s_n), "S_n": int(S_n), "exact": len(pols) == 1,
                           "observed": sorted([list(map(int, p)) for p in pols])},
            })
        return {"horizon": self.horizon, "K": self.model.K, "regions": out}

    def to_json(self, **kw) -> str:
        return json.dumps(self.export(**kw), indent=2)


def _prime_sets(model: ModelSpec, fam: dict, ys, lo: int, max_vectors: int):
    """Γ'(y) = cost vector at y plus the discounted continuation sets at y - d."""
    cv = cost_vectors(model, list(ys))
    outcomes = [(k, z) for k in range(model.M) for z in range(model.Z) if model.joint[k, z].any()]

    def one(arg):
        y, c = arg
        blocks = []
        for k, z in outcomes:
            s = max(int(y - model.demands[k]), lo)
            blocks.append(model.beta * (fam[s] @ model.joint[k, z].T))
        if model.beta == 0.0 or not blocks:
            return y, c[None, :]
        return y, cross_sum(c[None, :], blocks, max_vectors=max_vectors)

    return dict(pmap(one, list(zip(ys, cv))))


def solve_ss_finite(model: ModelSpec, n: int, *, s_max: int | None = None,
                    require_a1: bool = True, max_vectors: int = DEFAULT_MAX_VECTORS,
                    depth: int = DEFAULT_SS_DEPTH, with_regions: bool = False) -> SSPolicy:
    """Γ-set families for horizons 0..n on an integer inventory window.

    Orders above ``d_M + ceil(beta K / h)`` are never optimal, and below the
    window's lower end ordering is forced, so the window is exact."""
    _require_k(model)
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    if n > depth:
        raise ResourceLimitError(f"horizon {n} exceeds the configured depth {depth}")
    if require_a1 and not check_a1(model).holds:
        raise AssumptionError("solve_ss_finite needs attainability; check_a1 reports a violation")
    d = model.demands
    lo, _ = level_window(model)
    top = int(d[-1]) + math.ceil(model.beta * model.K / model.h) + 1
    hi = max(top, lo + 1 if s_max is None else int(s_max))
    span = max(int(d[-1]), 0)
    lift = max(-int(d[0]), 0)
    N = model.N
    # level t needs states reachable from the final window within n - t periods
    los = [lo - (n - t) * span for t in range(n + 1)]
    his = [hi + (n - t) * lift for t in range(n + 1)]
    families = [{s: np.zeros((1, N)) for s in range(los[0], his[0] + 1)}]
    gprime = None
    for t in range(n + 1):
        fam = families[t]
        nxt_lo = los[t + 1] if t < n else lo
        nxt_hi = his[t + 1] if t < n else hi
        ys = range(nxt_lo, nxt_hi + 1)
        gp = _prime_sets(model, fam, ys, los[t], max_vectors)
        if t == n:
            gprime = gp
            break
        new = {}
        suffix = None   # union of K + Γ'(y) over y > s, built from the top
        for s in reversed(ys):
            parts = [gp[s]] if suffix is None else [gp[s], suffix]
            new[s] = prune_vectors(np.vstack(parts))
            if s <= top:
                cand = model.K + gp[s]
                suffix = cand if suffix is None else prune_vectors(np.vstack([suffix, cand]))
        families.append(dict(sorted(new.items())))
    pol = SSPolicy(model, n, families, gprime, (lo, hi))
    if with_regions:
        pol.regions = ss_partition(model)
    return pol
