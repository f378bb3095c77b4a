"""Small dense linear programs.

Two-phase tableau simplex with Bland's anti-cycling rule.  Problems in this
package have a handful of variables (belief coordinates plus a slack or two)
and at most a few hundred rows, so a dense tableau is adequate and keeps the
pivoting fully deterministic.

The canonical problem is::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= 0            (except indices listed in ``free``)
                sum(x) == 1       (over non-free variables, if ``simplex``)

Numerics: the leaving row is chosen with a two-pass (Harris) ratio test that
avoids tiny pivot elements, ties go to the lowest-index basic variable, and
the tableau is periodically rebuilt from the original data for the current
basis so rounding does not accumulate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LPError

MAX_PIVOTS = 10_000
PIVOT_TOL = 1e-9
COST_TOL = 1e-11
FEAS_TOL = 1e-9
HARRIS_TOL = 1e-11
REFRESH_EVERY = 20
DEGENERATE_LIMIT = 50

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    status: str
    value: float
    x: np.ndarray | None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Simplex:
    """Tableau over a fixed standard-form system ``A x = b, x >= 0``."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int], partner=None):
        self.A = A
        self.b = b
        self.basis = list(basis)
        # partner[j]: the other half of a split free variable, or -1
        self.partner = np.full(A.shape[1], -1) if partner is None else partner[:A.shape[1]]
        self.pivots = 0
        # callers either start from an identity basis or call refresh()
        self.T = np.hstack([A, b[:, None]])
        self._since_refresh = 0
        self._degenerate_run = 0

    def refresh(self) -> bool:
        try:
            T = np.linalg.solve(self.A[:, self.basis], np.hstack([self.A, self.b[:, None]]))
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(T)):
            return False
        self.T = T
        self._since_refresh = 0
        return True

    def pivot(self, row: int, col: int) -> None:
        self.pivots += 1
        if self.pivots > MAX_PIVOTS:
            raise LPError(f"simplex exceeded {MAX_PIVOTS} pivots (cycling guard)")
        T = self.T
        T[row] /= T[row, col]
        colvals = T[:, col].copy()
        colvals[row] = 0.0
        nz = np.nonzero(colvals)[0]
        if nz.size:
            T[nz] -= np.outer(colvals[nz], T[row])
        T[row, col] = 1.0
        self.basis[row] = col
        self._since_refresh += 1
        if self._since_refresh >= REFRESH_EVERY:
            self.refresh()

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        return cost - cost[self.basis] @ self.T[:, :-1]

    def minimize(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        """Bland's rule (lowest-index entering column) over ``allowed`` columns."""
        tol = COST_TOL * max(1.0, np.abs(cost).max(initial=0.0))
        confirmed = False
        has_partner = self.partner >= 0
        while True:
            rc = self.reduced_costs(cost)
            inbasis = np.zeros(len(allowed), dtype=bool)
            inbasis[self.basis] = True
            # basic columns have zero reduced cost up to rounding
            ok = allowed & ~inbasis
            if has_partner.any():
                # u - v with u basic: v's reduced cost is zero up to rounding
                ok[has_partner] &= ~inbasis[self.partner[has_partner]]
            cand = np.nonzero((rc < -tol) & ok)[0]
            if cand.size == 0:
                # confirm on a freshly rebuilt tableau before declaring optimality
                if confirmed or not self.refresh():
                    return OPTIMAL
                confirmed = True
                continue
            col = int(cand[0])
            row = self._ratio_row(col)
            if row is None:
                if confirmed or not self.refresh():
                    return UNBOUNDED
                confirmed = True
                continue
            confirmed = False
            self.pivot(row, col)

    def _ratio_row(self, col: int) -> int | None:
        a = self.T[:, col]
        rhs = np.maximum(self.T[:, -1], 0.0)
        pos = np.nonzero(a > PIVOT_TOL)[0]
        if pos.size == 0:
            return None
        ratios = rhs[pos] / a[pos]
        if self._degenerate_run >= DEGENERATE_LIMIT:
            # stalled: plain Bland leaving rule, which cannot cycle
            best = ratios.min()
            ok = pos[ratios <= best + 1e-14 * max(1.0, best)]
        else:
            # pass 1: largest step keeping every basic variable above -HARRIS_TOL
            theta = np.min((rhs[pos] + HARRIS_TOL) / a[pos])
            ok = pos[ratios <= theta]
            # pass 2: drop tiny pivots
            ok = ok[a[ok] >= 0.1 * a[ok].max()]
        row = int(min(ok, key=lambda r: self.basis[r]))
        if rhs[row] / a[row] <= 1e-14:
            self._degenerate_run += 1
        else:
            self._degenerate_run = 0
        return row

    def solution(self, ncols: int) -> np.ndarray:
        x = np.zeros(ncols)
        x[self.basis] = np.maximum(self.T[:, -1], 0.0)
        return x


def solve_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    *,
    simplex: bool = False,
    free=(),
    maximize: bool = False,
) -> LPResult:
    """Solve a small LP; see the module docstring for the problem form.

    Returns an :class:`LPResult` with status ``optimal``, ``infeasible`` or
    ``unbounded``.  Raises :class:`LPError` when the pivot guard trips.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    free = sorted(set(int(i) for i in free))
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape[1] != n or A_eq.shape[1] != n:
        raise ValueError("constraint width does not match objective length")
    if A_ub.shape[0] != b_ub.size or A_eq.shape[0] != b_eq.size:
        raise ValueError("constraint rows do not match right-hand sides")
    for arr in (c, A_ub, b_ub, A_eq, b_eq):
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite LP coefficients")

    if simplex:
        row = np.ones(n)
        row[free] = 0.0
        A_eq = np.vstack([A_eq, row])
        b_eq = np.append(b_eq, 1.0)

    # free variables x_f = u - v; the v columns are appended after x
    sign = -1.0 if maximize else 1.0
    cost = sign * c
    if free:
        cost = np.concatenate([cost, -cost[free]])
        A_ub = np.hstack([A_ub, -A_ub[:, free]])
        A_eq = np.hstack([A_eq, -A_eq[:, free]])
    nv = cost.size
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # standard form [x | slacks | artificials]; rows with negative rhs are flipped
    rows = np.vstack([A_ub, A_eq])
    rhs = np.concatenate([b_ub, b_eq])
    flip = rhs < 0
    rows[flip] *= -1
    rhs = np.abs(rhs)
    slack = np.zeros((m, m_ub))
    slack[np.arange(m_ub), np.arange(m_ub)] = np.where(flip[:m_ub], -1.0, 1.0)
    needs_art = np.r_[flip[:m_ub], np.ones(m_eq, dtype=bool)]
    art_rows = np.nonzero(needs_art)[0]
    art = np.zeros((m, art_rows.size))
    art[art_rows, np.arange(art_rows.size)] = 1.0
    A = np.hstack([rows, slack, art])
    art_start = nv + m_ub
    ncols = A.shape[1]
    partner = np.full(A.shape[1], -1)
    for k, f in enumerate(free):
        partner[f], partner[n + k] = n + k, f
    basis = [nv + r for r in range(m)]
    for k, r in enumerate(art_rows):
        basis[r] = art_start + k

    if art_rows.size:
        sx = _Simplex(A, rhs, basis, partner)
        c1 = np.zeros(ncols)
        c1[art_start:] = 1.0
        # phase 1 is bounded below by zero, so its status is always optimal
        sx.minimize(c1, np.ones(ncols, dtype=bool))
        infeas = float(np.sum(sx.solution(ncols)[art_start:]))
        if infeas > FEAS_TOL * max(1.0, rhs.max(initial=0.0)):
            return LPResult(INFEASIBLE, float("nan"), None, sx.pivots)
        # pivot remaining zero-level artificials out; drop redundant rows
        keep = []
        for r in range(m):
            if sx.basis[r] >= art_start:
                nz = np.nonzero(np.abs(sx.T[r, :art_start]) > 1e-9)[0]
                if nz.size:
                    sx.pivot(r, int(nz[np.argmax(np.abs(sx.T[r, nz]))]))
                    keep.append(r)
            else:
                keep.append(r)
        pivots = sx.pivots
        sx = _Simplex(A[keep][:, :art_start], rhs[keep], [sx.basis[r] for r in keep], partner)
        sx.pivots = pivots
        if not sx.refresh():
            raise LPError("singular basis after phase 1")
    else:
        sx = _Simplex(A[:, :art_start], rhs, basis, partner)

    status = sx.minimize(np.r_[cost, np.zeros(m_ub)], np.ones(art_start, dtype=bool))
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, -sign * float("inf"), None, sx.pivots)
    sol = sx.solution(art_start)
    x = sol[:n].copy()
    if free:
        x[free] -= sol[n:nv]
    return LPResult(OPTIMAL, float(c @ x), x, sx.pivots)


def maximize_over_simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> LPResult:
    """Maximize ``c @ x`` over the probability simplex intersected with constraints."""
    return solve_lp(c, A_ub, b_ub, A_eq, b_eq, simplex=True, maximize=True)
