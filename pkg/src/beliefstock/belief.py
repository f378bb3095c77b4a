"""Bayes filtering of the modulation state.

Outcomes are addressed by demand index ``k`` (into ``model.demands``) and
observation index ``z``, both zero-based.
"""

from __future__ import annotations

import numpy as np

from .errors import BeliefError, ImpossibleObservation
from .model import ModelSpec

BELIEF_TOL = 1e-9
IMPOSSIBLE_TOL = 1e-12
DEDUP_TOL = 1e-9


def check_belief(x, N: int | None = None) -> np.ndarray:
    """Return ``x`` as a float array after checking it lies on the simplex."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise BeliefError(f"belief must be a vector, got shape {x.shape}")
    if N is not None and x.size != N:
        raise BeliefError(f"belief has {x.size} entries, model has {N} states")
    if not np.all(np.isfinite(x)) or np.any(x < -BELIEF_TOL):
        raise BeliefError(f"belief has negative or non-finite entries: {x.tolist()}")
    if abs(x.sum() - 1.0) > BELIEF_TOL:
        raise BeliefError(f"belief sums to {x.sum():.12g}, expected 1")
    return np.clip(x, 0.0, None)


def unit_belief(N: int, m: int) -> np.ndarray:
    """The point mass on state ``m`` (zero-based)."""
    if not 0 <= m < N:
        raise BeliefError(f"state index {m} out of range for N={N}")
    e = np.zeros(N)
    e[m] = 1.0
    return e


def parse_belief(text: str, N: int) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise BeliefError(f"cannot parse belief {text!r}") from None
    return check_belief(vals, N)


def sigma(model: ModelSpec, k: int, z: int, x) -> float:
    """Probability of observing demand index ``k`` and signal ``z`` from belief ``x``."""
    return float(np.asarray(x) @ model.outcome_rows[k, z])


def sigma_marginal(model: ModelSpec, k: int, x) -> float:
    return float(np.asarray(x) @ model.demand_rows[k])


def outcome_probs(model: ModelSpec, x) -> np.ndarray:
    """All sigma(d, z, x) at once; shape (M, Z), or (B, M, Z) for a batch."""
    return np.einsum("...i,kzi->...kz", np.asarray(x, dtype=float), model.outcome_rows)


def lambda_update(model: ModelSpec, k: int, z: int, x) -> np.ndarray:
    """Posterior after observing (demand index ``k``, signal ``z``)."""
    x = np.asarray(x, dtype=float)
    w = x @ model.joint[k, z]
    s = w.sum()
    if s < IMPOSSIBLE_TOL:
        raise ImpossibleObservation(
            f"outcome (d={int(model.demands[k])}, z={z}) has probability {s:.3g} under this belief")
    return w / s


def posteriors(model: ModelSpec, X) -> tuple[np.ndarray, np.ndarray]:
    """Batched filter step.

    ``X`` has shape (B, N).  Returns ``(sig, post)`` with ``sig`` of shape
    (B, M, Z) and ``post`` of shape (B, M, Z, N); posteriors of impossible
    outcomes are left as zero rows and must be masked with ``sig``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    W = np.einsum("bi,kzij->bkzj", X, model.joint)
    sig = W.sum(axis=-1)
    ok = sig >= IMPOSSIBLE_TOL
    post = np.zeros_like(W)
    np.divide(W, sig[..., None], out=post, where=ok[..., None])
    return np.where(ok, sig, 0.0), post


def dedup_beliefs(X: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Merge rows closer than ``tol`` in the max-norm (first occurrence wins)."""
    X = np.atleast_2d(X)
    if len(X) <= 1:
        return X.copy()
    # coarse pass on a lattice, then an exact greedy pass on the survivors
    _, first = np.unique(np.round(X / tol).astype(np.int64), axis=0, return_index=True)
    X = X[np.sort(first)]
    if len(X) > 20_000:
        return X
    keep = [0]
    for i in range(1, len(X)):
        if np.abs(X[keep] - X[i]).max(axis=1).min() > tol:
            keep.append(i)
    return X[keep]


def reachable_beliefs(model: ModelSpec, x, n: int, *, cumulative: bool = False) -> np.ndarray:
    """Beliefs reachable in exactly ``n`` filter steps from ``x`` (or in at
    most ``n`` steps when ``cumulative``), as an array of rows."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    cur = check_belief(x, model.N)[None, :]
    seen = [cur]
    for _ in range(n):
        sig, post = posteriors(model, cur)
        cur = dedup_beliefs(post[sig > 0])
        seen.append(cur)
    if cumulative:
        return dedup_beliefs(np.vstack(seen))
    return cur
