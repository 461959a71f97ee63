"""Centralized numerical tolerances.

Solvers and the test suite import the same record so a tolerance is never
pinned in two places.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # model invariants
    row_sum: float = 1e-12          # transition rows / rho mass
    policy_row: float = 1e-10       # policy rows on the simplex
    invariant_slack: float = 1e-10  # generic invariant slack (projections etc.)

    # linear-solve policy evaluation
    solve_residual: float = 1e-8    # Bellman residual of the dense solve
    scalarized_match: float = 1e-9  # Q_{r+lam.g} vs Q_r + sum lam_i Q_{g_i}

    # value iteration (oracle scalarized solves)
    vi_residual: float = 1e-10

    # occupancy-measure LP
    lp_pivot: float = 1e-9          # reduced-cost threshold for entering column
    lp_ratio: float = 1e-10         # minimum usable pivot element
    lp_feasibility: float = 1e-8    # phase-one artificial mass => infeasible
    lp_mass: float = 1e-8           # occupancy must sum to 1 within this
    lp_match: float = 1e-6          # recovered policy vs LP objective
    degenerate_row: float = 1e-12   # occupancy row treated as unvisited

    # oracle cross-validation
    duality_agree: float = 1e-3     # primal/dual agreement => status optimal
    duality_fail: float = 1e-2      # disagreement beyond this => diagnostics error


TOL = Tolerances()
