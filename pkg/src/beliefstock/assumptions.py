"""Checks for the structural assumptions under which the myopic base stock
policy is optimal, and the slack needed when it is not.

Attainability: after any demand d and signal z, the leftover inventory
s*(x) - d must not exceed the myopic level at the posterior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .belief import check_belief, posteriors, reachable_beliefs, IMPOSSIBLE_TOL
from .errors import ImpossibleObservation
from .model import ModelSpec
from .regions import INTERIOR_TOL, interior_slack
from .single_period import cumulative_rows, myopic_index, p1_region, partition_p1

EXACT = "exact_lp"
SUFFICIENT = "sufficient_a3a4"
SAMPLED = "sampled"


@dataclass
class A1Report:
    holds: bool
    method: str
    witnesses: list = field(default_factory=list)
    boundary_only: list = field(default_factory=list)
    feasible: list = field(default_factory=list)  # every LP-feasible (m, k, z, m') checked

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "method": self.method,
            "witnesses": [_witness_json(w) for w in self.witnesses],
            "boundary_only": [_witness_json(w) for w in self.boundary_only],
        }


def _witness_json(w: dict) -> dict:
    out = {k: w[k] for k in ("m", "d", "z", "mprime", "violation")}
    if w.get("x") is not None:
        out["x"] = [float(v) for v in w["x"]]
    return out


def posterior_region_rows(model: ModelSpec, k: int, z: int, mp: int):
    """Linear rows (A, b, strict) on the *prior* x that place the posterior
    after outcome (k, z) in region mp, with the normalizer cleared."""
    C = cumulative_rows(model)
    cr = model.costs.critical_ratio
    J = model.joint[k, z]
    tot = J.sum(axis=1)       # sigma(k, z, e_i)
    JC = J @ C.T              # column m: x @ JC[:, m] = x P(k,z) sum_{l<=m} P(d_l) 1
    A, b, s = [], [], []
    if mp > 0:
        A.append(JC[:, mp - 1] - cr * tot); b.append(0.0); s.append(True)
    if mp < model.M - 1:
        A.append(cr * tot - JC[:, mp]); b.append(0.0); s.append(False)
    # the outcome itself must be possible
    A.append(-tot); b.append(0.0); s.append(True)
    return A, b, s


def _triple_status(model: ModelSpec, m: int, k: int, z: int, mp: int):
    reg = p1_region(model, m)
    A0, b0, s0 = reg.constraint_arrays()
    A1, b1, s1 = posterior_region_rows(model, k, z, mp)
    A = np.vstack([A0, np.array(A1)]) if len(A0) else np.array(A1)
    b = np.r_[b0, b1]
    s = np.r_[s0, s1].astype(bool)
    t, x = interior_slack(A, b, s, model.N)
    if t == float("-inf"):
        return "empty", None
    if t > INTERIOR_TOL:
        return "interior", x
    return "boundary", x


def attainability_sweep(model: ModelSpec, *, all_triples: bool = False):
    """LP status of every (m, k, z, m') with m a nonempty myopic region.

    Unless ``all_triples``, triples whose potential violation
    d_m - d_k - d_m' is not positive are skipped; they cannot break
    attainability."""
    d = model.demands
    regions = [r.meta["m"] for r in partition_p1(model)]
    jobs = []
    for m in regions:
        for k in range(model.M):
            for z in range(model.Z):
                if model.outcome_rows[k, z].max() < IMPOSSIBLE_TOL:
                    continue
                for mp in regions:
                    v = int(d[m] - d[k] - d[mp])
                    if v > 0 or all_triples:
                        jobs.append((m, k, z, mp, v))

    def run(job):
        m, k, z, mp, v = job
        status, x = _triple_status(model, m, k, z, mp)
        return dict(m=m, d=int(d[k]), k=k, z=z, mprime=mp, violation=v, status=status, x=x)

    return pmap(run, jobs)


def check_a1_exact(model: ModelSpec) -> A1Report:
    rows = attainability_sweep(model)
    wit = [r for r in rows if r["status"] == "interior" and r["violation"] > 0]
    bnd = [r for r in rows if r["status"] == "boundary" and r["violation"] > 0]
    feas = [r for r in rows if r["status"] == "interior"]
    return A1Report(not wit, EXACT, wit, bnd, feas)


def check_a1_sampled(model: ModelSpec, samples: int = 2000, seed: int = 0) -> A1Report:
    """Pre-screen on random beliefs plus the vertices.  Finding a witness is
    conclusive; finding none is not."""
    rng = np.random.default_rng(seed)
    X = np.vstack([np.eye(model.N), rng.dirichlet(np.ones(model.N), samples)])
    m = myopic_index(model, X)
    sig, post = posteriors(model, X)
    d = model.demands
    mp = myopic_index(model, post.reshape(-1, model.N)).reshape(sig.shape)
    viol = d[m][:, None, None] - d[None, :, None] - d[mp]
    bad = (viol > 0) & (sig > 0)
    seen, wit = set(), []
    for b, k, z in zip(*np.nonzero(bad)):
        key = (int(m[b]), int(k), int(z), int(mp[b, k, z]))
        if key in seen:
            continue
        seen.add(key)
        wit.append(dict(m=key[0], d=int(d[k]), k=key[1], z=key[2], mprime=key[3],
                        violation=int(viol[b, k, z]), status="sampled", x=X[b]))
    return A1Report(not wit, SAMPLED, wit)


def check_a3(model: ModelSpec, tol: float = 1e-12) -> bool:
    """Demand is stochastically increasing in the current state."""
    tails = np.cumsum(model.demand_rows[::-1], axis=0)[::-1]   # (M, N): Pr(d >= d_m | i)
    return bool(np.all(np.diff(tails, axis=1) >= -tol))


def tail_sums(x) -> np.ndarray:
    """t[j] = sum_{i >= j} x_i."""
    x = np.asarray(x, dtype=float)
    return np.cumsum(x[..., ::-1], axis=-1)[..., ::-1]


def dominated_by(x, xp, tol: float = 1e-12) -> bool:
    """First-order dominance x <= xp: every tail sum of x is at most xp's."""
    return bool(np.all(tail_sums(x) <= tail_sums(xp) + tol))


def construct_xhat(model: ModelSpec, k: int, z: int) -> np.ndarray:
    """Greatest belief dominated by every posterior after outcome (k, z)."""
    J = model.joint[k, z]
    tot = J.sum(axis=1)
    ok = tot >= IMPOSSIBLE_TOL
    if not ok.any():
        raise ImpossibleObservation(f"outcome (d={int(model.demands[k])}, z={z}) is impossible from every state")
    lam = J[ok] / tot[ok, None]
    t = tail_sums(lam).min(axis=0)
    t = np.minimum.accumulate(t)   # already monotone; guards rounding
    t[0] = 1.0
    x = t - np.r_[t[1:], 0.0]
    return np.clip(x, 0.0, None)


def check_a4(model: ModelSpec) -> bool:
    top = model.demands[myopic_index(model, np.eye(model.N)[-1])]
    for k in range(model.M):
        for z in range(model.Z):
            if model.outcome_rows[k, z].max() < IMPOSSIBLE_TOL:
                continue
            xh = construct_xhat(model, k, z)
            if top - model.demands[k] > model.demands[myopic_index(model, xh)]:
                return False
    return True


def check_a1(model: ModelSpec, method: str = EXACT) -> A1Report:
    if method == SUFFICIENT:
        if check_a3(model) and check_a4(model):
            return A1Report(True, SUFFICIENT)
        return check_a1_exact(model)
    if method == SAMPLED:
        return check_a1_sampled(model)
    if method == EXACT:
        return check_a1_exact(model)
    raise ValueError(f"unknown method {method!r}")


def check_a2(model: ModelSpec, x, depth: int) -> bool:
    """All beliefs reachable within ``depth`` steps share one myopic region.

    Only certified to the given depth."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    B = reachable_beliefs(model, check_belief(x, model.N), depth, cumulative=True)
    return bool(np.unique(myopic_index(model, B)).size == 1)


def min_delta(model: ModelSpec, sweep=None) -> int:
    """Smallest integer shift making the attainability inequality hold."""
    rows = attainability_sweep(model) if sweep is None else sweep
    v = [r["violation"] for r in rows if r["status"] == "interior"]
    return max([0, *v])
