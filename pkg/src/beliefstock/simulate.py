"""Monte-Carlo evaluation of ordering policies.

Each replication draws its uniforms from its own PCG64 stream, spawned from
``SeedSequence(seed)`` with the replication index as spawn key, so results
do not depend on batch size or thread count.  Sampling is by inverse CDF
over the flattened (demand, observation, next state) row of the kernel.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._parallel import pmap
from .belief import check_belief
from .errors import BeliefStockError
from .model import ModelSpec
from .single_period import myopic_base_stock, period_cost


class PolicyError(BeliefStockError, ValueError):
    """A policy asked to lower the inventory."""


class MyopicPolicy:
    """Order up to max(s, s*(x))."""
    name = "myopic"

    def __init__(self, model: ModelSpec):
        self.model = model

    def __call__(self, X, S):
        return np.maximum(S, myopic_base_stock(self.model, X))


class SSRule:
    """(s, S) decisions from a solved :class:`~beliefstock.reorder.SSPolicy`,
    applied at every epoch (the horizon-n thresholds are used throughout)."""
    name = "ss"

    def __init__(self, policy):
        self.policy = policy

    def __call__(self, X, S):
        Y = np.array(S, dtype=float, copy=True)
        for b, (x, s) in enumerate(zip(X, S)):
            act = self.policy.action(x, int(s))
            if act["order"]:
                Y[b] = act["y"]
        return Y


class CallbackPolicy:
    """Wrap ``f(belief, inventory) -> order-up-to level`` for single states."""
    name = "callback"

    def __init__(self, fn: Callable):
        self.fn = fn

    def __call__(self, X, S):
        return np.array([self.fn(x, s) for x, s in zip(X, S)], dtype=float)


@dataclass
class SimulationResult:
    mean: float
    stderr: float
    ci95: tuple
    replications: int
    horizon: int
    seed: int
    costs: np.ndarray = field(repr=False)
    absorption_violations: int | None = None
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = {
            "mean": self.mean,
            "stderr": self.stderr,
            "ci95": list(self.ci95),
            "replications": self.replications,
            "horizon": self.horizon,
            "seed": self.seed,
        }
        if self.absorption_violations is not None:
            out["absorption_violations"] = self.absorption_violations
        return out


def trace_csv(rows, N: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replication", "epoch", "mu", *[f"x_{i + 1}" for i in range(N)],
                "s", "y", "d", "z", "cost"])
    for r in rows:
        w.writerow([r["replication"], r["epoch"], r["mu"], *[repr(float(v)) for v in r["x"]],
                    r["s"], r["y"], r["d"], r["z"], repr(float(r["cost"]))])
    return buf.getvalue()


def replication_uniforms(seed: int, reps, horizon: int) -> np.ndarray:
    """Row r: the horizon + 1 uniforms of replication ``reps[r]``."""
    out = np.empty((len(reps), horizon + 1))
    for row, r in enumerate(reps):
        ss = np.random.SeedSequence(seed, spawn_key=(int(r),))
        out[row] = np.random.Generator(np.random.PCG64(ss)).random(horizon + 1)
    return out


def _run_batch(model, policy, x0, s0, horizon, seed, reps, check_absorption, trace_reps):
    U = replication_uniforms(seed, reps, horizon)
    B, N, M, Z = len(reps), model.N, model.M, model.Z
    cdf0 = np.cumsum(x0)
    mu = np.minimum(np.searchsorted(cdf0, U[:, 0], side="right"), N - 1)
    # flattened (k, z, j) rows for each current state
    flat = model.joint.transpose(2, 0, 1, 3).reshape(N, M * Z * N)
    cdf = np.cumsum(flat, axis=1)
    cdf[:, -1] = np.inf
    X = np.repeat(x0[None, :], B, axis=0)
    S = np.full(B, float(s0))
    cost = np.zeros(B)
    disc = 1.0
    bad = np.zeros(B, dtype=bool)
    d = model.demands.astype(float)
    trace = []
    for t in range(horizon):
        sstar = myopic_base_stock(model, X).astype(float)
        if check_absorption:
            bad |= S > sstar
        Y = np.asarray(policy(X, S), dtype=float)
        if np.any(Y < S - 1e-9):
            b = int(np.argmax(Y < S - 1e-9))
            raise PolicyError(f"policy returned order-up-to {Y[b]} below inventory {S[b]}")
        u = U[:, t + 1]
        flat_idx = _search_rows(cdf, mu, u)
        k, rem = np.divmod(flat_idx, Z * N)
        z, j = np.divmod(rem, N)
        c = period_cost(Y, d[k], model.p, model.h) + model.K * (Y > S)
        cost += disc * c
        for b in np.nonzero(np.isin(reps, trace_reps))[0]:
            trace.append({"replication": int(reps[b]), "epoch": t, "mu": int(mu[b]), "x": X[b].copy(),
                          "s": float(S[b]), "y": float(Y[b]), "d": int(d[k[b]]), "z": int(z[b]),
                          "cost": float(c[b])})
        U_ = np.einsum("bi,bij->bj", X, model.joint[k, z])
        X = U_ / U_.sum(axis=1, keepdims=True)
        S = Y - d[k]
        mu = j
        disc *= model.beta
    return cost, bad, trace


def _search_rows(cdf, rows, u):
    """searchsorted(cdf[rows[b]], u[b]) for every b."""
    return np.sum(cdf[rows] <= u[:, None], axis=1)


def simulate_policy(model: ModelSpec, policy, x0, s0: float, horizon: int, replications: int,
                    seed: int = 0, *, check_absorption: bool = False, trace: int = 0,
                    batch: int = 20_000) -> SimulationResult:
    """Discounted cost of ``policy`` over ``horizon`` epochs.

    ``policy`` maps (beliefs (B, N), inventories (B,)) to order-up-to levels;
    ``"myopic"`` and plain per-state callables are also accepted.
    With ``check_absorption`` every epoch is checked for inventory above the
    myopic level, and the number of offending replications is reported.
    ``trace`` records the first that many replications."""
    if horizon < 1 or replications < 1:
        raise ValueError("horizon and replications must be at least 1")
    x0 = check_belief(x0, model.N)
    if policy == "myopic":
        policy = MyopicPolicy(model)
    elif not hasattr(policy, "name"):
        policy = CallbackPolicy(policy)
    trace_reps = np.arange(min(trace, replications))
    chunks = [np.arange(lo, min(lo + batch, replications)) for lo in range(0, replications, batch)]
    parts = pmap(lambda r: _run_batch(model, policy, x0, s0, horizon, seed, r,
                                      check_absorption, trace_reps), chunks)
    costs = np.concatenate([p[0] for p in parts])
    bad = np.concatenate([p[1] for p in parts])
    rows = [row for p in parts for row in p[2]]
    mean = float(np.sum(costs) / replications)
    sd = float(np.std(costs, ddof=1)) if replications > 1 else 0.0
    se = float(sd / np.sqrt(replications))
    return SimulationResult(mean, se, (mean - 1.96 * se, mean + 1.96 * se), replications,
                            horizon, seed, costs,
                            int(bad.sum()) if check_absorption else None, rows)
