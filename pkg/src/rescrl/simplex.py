"""Self-contained two-phase dense simplex for small equality-form LPs.

Solves   minimize c.x   subject to   A x = b,  x >= 0.

Bland's smallest-index rule picks both the entering and the leaving
variable, so the method cannot cycle; robustness is preferred over speed
because the occupancy LPs solved here have at most a few hundred columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import TOL
from .errors import LpSolverError

__all__ = ["LpResult", "solve_lp"]

_MAX_PIVOTS = 50_000


@dataclass(frozen=True)
class LpResult:
    status: str              # "optimal" | "infeasible"
    x: np.ndarray | None
    objective: float | None


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0.0
    tab -= np.outer(factors, tab[row])
    basis[row] = col


def _bland_iterate(tab: np.ndarray, basis: np.ndarray, ncols: int, phase: str) -> None:
    """Run simplex pivots on a tableau whose last row is the reduced-cost
    row and last column the right-hand side."""
    pivots = 0
    while True:
        reduced = tab[-1, :ncols]
        entering = -1
        for j in range(ncols):
            if reduced[j] < -TOL.lp_pivot:
                entering = j
                break
        if entering < 0:
            return
        column = tab[:-1, entering]
        rhs = tab[:-1, -1]
        best_ratio = np.inf
        leave = -1
        for i in range(len(basis)):
            if column[i] > TOL.lp_ratio:
                ratio = rhs[i] / column[i]
                if ratio < best_ratio - 1e-15 or (
                    abs(ratio - best_ratio) <= 1e-15 and (leave < 0 or basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            raise LpSolverError(
                f"{phase}: entering column {entering} has no positive pivot (unbounded "
                f"or numerically degenerate basis after {pivots} pivots)"
            )
        _pivot(tab, basis, leave, entering)
        pivots += 1
        if pivots > _MAX_PIVOTS:
            raise LpSolverError(f"{phase}: pivot limit {_MAX_PIVOTS} exceeded")


def solve_lp(c, a_eq, b_eq) -> LpResult:
    """Two-phase simplex with Bland's rule.

    Returns status "infeasible" when phase one leaves artificial mass above
    the feasibility tolerance; raises LpSolverError on numerically
    degenerate bases or pivot-limit blowups.
    """
    c = np.asarray(c, dtype=float)
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    nrows, ncols = a.shape
    if c.shape != (ncols,) or b.shape != (nrows,):
        raise ValueError("inconsistent LP dimensions")

    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # phase one: artificial basis, minimize artificial mass
    tab = np.zeros((nrows + 1, ncols + nrows + 1))
    tab[:-1, :ncols] = a
    tab[:-1, ncols:ncols + nrows] = np.eye(nrows)
    tab[:-1, -1] = b
    # reduced costs for objective sum(artificials) with the artificial basis
    tab[-1, :ncols] = -a.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = np.arange(ncols, ncols + nrows)

    _bland_iterate(tab, basis, ncols + nrows, "phase one")
    if -tab[-1, -1] > TOL.lp_feasibility:
        return LpResult(status="infeasible", x=None, objective=None)

    # drive any artificial still in the basis out, or drop its (redundant) row
    keep = np.ones(nrows, dtype=bool)
    for i in range(nrows):
        if basis[i] >= ncols:
            pivot_col = -1
            for j in range(ncols):
                if abs(tab[i, j]) > TOL.lp_ratio:
                    pivot_col = j
                    break
            if pivot_col >= 0:
                _pivot(tab, basis, i, pivot_col)
            else:
                keep[i] = False
    if not keep.all():
        tab = np.vstack([tab[:-1][keep], tab[-1]])
        basis = basis[keep]

    # phase two on the original objective
    tab = np.hstack([tab[:, :ncols], tab[:, -1:]])
    cost_row = c.copy()
    rhs_obj = 0.0
    for i, var in enumerate(basis):
        if abs(c[var]) > 0:
            rhs_obj -= c[var] * tab[i, -1]
            cost_row -= c[var] * tab[i, :ncols]
    tab[-1, :ncols] = cost_row
    tab[-1, -1] = rhs_obj

    _bland_iterate(tab, basis, ncols, "phase two")

    x = np.zeros(ncols)
    x[basis] = tab[:-1, -1]
    np.maximum(x, 0.0, out=x)
    return LpResult(status="optimal", x=x, objective=float(c @ x))
