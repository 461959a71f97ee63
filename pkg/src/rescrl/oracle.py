"""Independent ground-truth machinery.

Two routes to the same numbers, kept deliberately separate so each can
vouch for the other:

* a primal route through an occupancy-measure LP solved with the in-house
  two-phase simplex (`solve_occupancy_lp`, `primal_value_map`), and
* a dual route through scalarized value iteration plus one-dimensional
  convex minimization (`solve_scalarized_mdp`, `dual_regularized`).

`solve_regularized` runs both and refuses to report "optimal" unless they
agree.

Unit note: the occupancy variable q is normalized (sums to one, flow
equations carry the (1-gamma) source term), so utility right-hand sides
and the objective are scaled by (1-gamma) when converting between q-space
and value-space; every number returned by this module is in value space.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .constants import TOL
from .errors import ConfigError, NumericalError, OracleDiagnosticsError
from .model import Cmdp, Policy, evaluate_policy, greedy_policy
from .resilience import CostFunction, QuadraticCost, relaxation_bound
from .simplex import solve_lp

__all__ = [
    "OccupancyLp",
    "OracleReport",
    "ScalarizedSolution",
    "solve_scalarized_mdp",
    "optimal_table_value",
    "solve_occupancy_lp",
    "primal_value_map",
    "dual_regularized",
    "dual_perturbed",
    "dual_minimize",
    "solve_regularized",
    "equilibrium_residual",
    "golden_min",
]

_VI_MAX_ITER = 1_000_000


@dataclass(frozen=True)
class OracleReport:
    """Result of an oracle solve; dual entries are None for pure-LP calls."""

    status: str                       # "optimal" | "infeasible" | "unbounded-dual-cap"
    primal_value: float | None = None
    dual_value: float | None = None
    xi_star: np.ndarray | None = None
    lambda_star: np.ndarray | None = None
    policy: Policy | None = None
    occupancy: np.ndarray | None = None


@dataclass(frozen=True)
class ScalarizedSolution:
    value: float          # optimal value at rho
    policy: Policy
    v: np.ndarray         # optimal state values (for warm starts)


def _value_iteration(model: Cmdp, table: np.ndarray, v0=None):
    """Value iteration on an arbitrary (S, A) cost table.

    Runs until the Bellman residual drops below TOL.vi_residual (or the
    float64 floor for very large scalarized costs, which is still below
    the certified bound for the caps used here).
    """
    p = model.transitions
    v = np.zeros(model.num_states) if v0 is None else np.asarray(v0, dtype=float).copy()
    eps = np.finfo(float).eps
    for _ in range(_VI_MAX_ITER):
        q = table + model.gamma * (p @ v)
        v_new = q.max(axis=1)
        diff = np.abs(v_new - v).max()
        v = v_new
        if diff <= max(TOL.vi_residual * 1e-2, 8 * eps * max(1.0, np.abs(v).max())):
            return v, q
    raise NumericalError("value iteration failed to converge")


def optimal_table_value(model: Cmdp, table: np.ndarray, v0=None) -> ScalarizedSolution:
    """max over policies of the table's value at rho, by value iteration
    plus greedy extraction (lowest-index ties)."""
    v, q = _value_iteration(model, table, v0=v0)
    policy = greedy_policy(q)
    return ScalarizedSolution(value=float(model.rho @ v), policy=policy, v=v)


def solve_scalarized_mdp(model: Cmdp, lam, v0=None) -> ScalarizedSolution:
    """Unconstrained solve of the MDP with reward r + lam.g.

    The returned greedy policy is re-evaluated exactly; a mismatch with
    the value-iteration optimum beyond 1e-8 raises NumericalError.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ConfigError("multipliers must be nonnegative")
    table = model.reward.copy()
    for i in range(model.num_constraints):
        table += lam[i] * model.translated[i]
    sol = optimal_table_value(model, table, v0=v0)
    check = evaluate_policy(model, sol.policy, weights=lam)
    if abs(check.v_scalarized_rho - sol.value) > 1e-8:
        raise NumericalError(
            f"greedy policy value {check.v_scalarized_rho:.12g} does not match "
            f"value-iteration optimum {sol.value:.12g}"
        )
    return sol


# --- occupancy-measure LP ----------------------------------------------------


@dataclass(frozen=True)
class OccupancyLp:
    """Equality-form occupancy LP: occupancy variables q(s,a) plus one
    surplus per utility row, Bellman-flow rows, and objective <r, q>."""

    c: np.ndarray       # minimize c.x (negated reward on the q block)
    a_eq: np.ndarray    # flow rows then utility rows
    b_eq: np.ndarray
    num_q: int          # leading columns holding q(s, a)

    @staticmethod
    def build(model: Cmdp, xi: np.ndarray) -> "OccupancyLp":
        """Flow rows sum_a q(s',a) - gamma sum P(s'|s,a) q(s,a) = (1-gamma) rho(s')
        and utility rows <g_i, q> - surplus_i = (1-gamma) xi_i (value-space
        xi scaled into the normalized-occupancy units)."""
        s, a, m = model.num_states, model.num_actions, model.num_constraints
        n_q = s * a
        ncols = n_q + m

        flow = np.zeros((s, n_q))
        for st in range(s):
            flow[st, st * a:(st + 1) * a] = 1.0
        flow -= model.gamma * model.transitions.transpose(2, 0, 1).reshape(s, n_q)

        a_eq = np.zeros((s + m, ncols))
        b_eq = np.zeros(s + m)
        a_eq[:s, :n_q] = flow
        b_eq[:s] = (1.0 - model.gamma) * model.rho
        for i in range(m):
            a_eq[s + i, :n_q] = model.translated[i].reshape(-1)
            a_eq[s + i, n_q + i] = -1.0
            b_eq[s + i] = (1.0 - model.gamma) * xi[i]

        c = np.zeros(ncols)
        c[:n_q] = -model.reward.reshape(-1)
        return OccupancyLp(c=c, a_eq=a_eq, b_eq=b_eq, num_q=n_q)


def solve_occupancy_lp(model: Cmdp, xi) -> OracleReport:
    """Primal value V*(xi) of the xi-perturbed problem via the occupancy LP.

    Infeasibility is a status, not an exception. The recovered policy is
    re-evaluated exactly and must reproduce the LP objective and satisfy
    the relaxed constraints within TOL.lp_match.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (model.num_constraints,):
        raise ConfigError(f"xi has shape {xi.shape}, expected {(model.num_constraints,)}")
    bound = relaxation_bound(model.gamma)
    if np.any(np.abs(xi) > bound + 1e-9):
        raise ConfigError(f"|xi| must be <= {bound:.6g}")

    lp = OccupancyLp.build(model, xi)
    res = solve_lp(lp.c, lp.a_eq, lp.b_eq)
    if res.status == "infeasible":
        return OracleReport(status="infeasible")

    s, a = model.num_states, model.num_actions
    q = res.x[: s * a].reshape(s, a)
    mass = q.sum()
    if abs(mass - 1.0) > TOL.lp_mass:
        raise NumericalError(f"occupancy mass {mass:.12g} differs from 1")
    value = -res.objective / (1.0 - model.gamma)

    row_mass = q.sum(axis=1)
    probs = np.empty_like(q)
    visited = row_mass >= TOL.degenerate_row
    probs[visited] = q[visited] / row_mass[visited, None]
    probs[~visited] = 1.0 / a  # unreachable under q; uniform fallback
    policy = Policy(probs)

    bundle = evaluate_policy(model, policy)
    if abs(bundle.v_reward_rho - value) > TOL.lp_match:
        raise NumericalError(
            f"recovered policy value {bundle.v_reward_rho:.12g} does not match "
            f"LP objective {value:.12g}"
        )
    if model.num_constraints and np.any(bundle.v_utils_rho < xi - TOL.lp_match):
        raise NumericalError("recovered policy violates the relaxed constraints")

    return OracleReport(status="optimal", primal_value=value, xi_star=xi,
                        policy=policy, occupancy=q)


def primal_value_map(model: Cmdp, xi_grid) -> tuple[np.ndarray, np.ndarray]:
    """V*(xi) over a list of grid points; -inf marks infeasible points."""
    pts = np.atleast_2d(np.asarray(xi_grid, dtype=float))
    values = np.full(len(pts), -np.inf)
    feasible = np.zeros(len(pts), dtype=bool)
    for k, xi in enumerate(pts):
        report = solve_occupancy_lp(model, xi)
        if report.status == "optimal":
            values[k] = report.primal_value
            feasible[k] = True
    return values, feasible


# --- dual route ---------------------------------------------------------------


def golden_min(f, lo: float, hi: float, tol: float = 1e-9):
    """Golden-section minimization of a unimodal (convex) scalar function."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
    x = 0.5 * (lo + hi)
    return x, f(x)


def _conjugate_xi_part(cost: CostFunction, lam: np.ndarray, bound: float):
    """max over xi in the box of (-h(xi) - lam.xi), with its maximizer.

    Closed form for the quadratic cost: xi_i = clamp(-lam_i/(2 alpha));
    alpha = 0 sends each coordinate with lam_i > 0 to the lower corner.
    """
    m = len(lam)
    if m == 0:
        return 0.0, np.zeros(0)
    if isinstance(cost, QuadraticCost):
        if cost.alpha == 0.0:
            xi = np.where(lam > 0, -bound, 0.0)
        else:
            xi = np.clip(-lam / (2.0 * cost.alpha), -bound, bound)
        return float(-cost.value(xi) - lam @ xi), xi
    # generic convex cost: projected gradient ascent on a concave objective
    lip = max(cost.grad_lipschitz, 1e-12)
    xi = np.zeros(m)
    for _ in range(2000):
        step = (-cost.grad(xi) - lam) / lip
        xi_new = np.clip(xi + step, -bound, bound)
        if np.abs(xi_new - xi).max() < 1e-12:
            xi = xi_new
            break
        xi = xi_new
    return float(-cost.value(xi) - lam @ xi), xi


def dual_regularized(model: Cmdp, cost: CostFunction, lam) -> float:
    """D_h(lam) = max_pi V_{r+lam.g}(rho) + max_xi (-h(xi) - lam.xi)."""
    lam = np.asarray(lam, dtype=float)
    mdp_part = solve_scalarized_mdp(model, lam).value
    xi_part, _ = _conjugate_xi_part(cost, lam, relaxation_bound(model.gamma))
    return mdp_part + xi_part


def dual_perturbed(model: Cmdp, xi, cap: float, tol: float = 1e-6) -> OracleReport:
    """D*(xi) = min over lam in [0, cap]^m of (D(lam) - lam.xi).

    For m = 1 the boundedness of the dual on [0, cap] is decided by the
    objective's slope at the cap (convexity makes that exact); a negative
    slope there means the relaxed problem is infeasible and the report
    status is "unbounded-dual-cap".
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    m = model.num_constraints
    if xi.shape != (m,):
        raise ConfigError(f"xi has shape {xi.shape}, expected {(m,)}")
    if m == 0:
        sol = solve_scalarized_mdp(model, np.zeros(0))
        return OracleReport(status="optimal", dual_value=sol.value,
                            lambda_star=np.zeros(0), policy=sol.policy)

    warm: dict[str, np.ndarray | None] = {"v": None}

    def dual_obj(lam_vec: np.ndarray) -> float:
        sol = solve_scalarized_mdp(model, lam_vec, v0=warm["v"])
        warm["v"] = sol.v
        return sol.value - float(lam_vec @ xi)

    if m == 1:
        cap_sol = solve_scalarized_mdp(model, np.array([cap]))
        cap_bundle = evaluate_policy(model, cap_sol.policy)
        slope_at_cap = float(cap_bundle.v_utils_rho[0] - xi[0])
        if slope_at_cap < -1e-9:
            return OracleReport(status="unbounded-dual-cap",
                                dual_value=dual_obj(np.array([cap])),
                                lambda_star=np.array([cap]))
        lam_star, val = golden_min(lambda x: dual_obj(np.array([x])), 0.0, cap, tol=tol)
        return OracleReport(status="optimal", dual_value=float(val),
                            lambda_star=np.array([lam_star]))

    lam = np.zeros(m)
    val = dual_obj(lam)
    for _ in range(60):
        prev = val
        for i in range(m):
            def line(x, i=i):
                trial = lam.copy()
                trial[i] = x
                return dual_obj(trial)
            lam_i, val = golden_min(line, 0.0, cap, tol=tol)
            lam[i] = lam_i
        if prev - val < 1e-10 * max(1.0, abs(val)):
            break
    status = "unbounded-dual-cap" if np.any(lam > cap * (1 - 1e-6)) else "optimal"
    return OracleReport(status=status, dual_value=float(val), lambda_star=lam)


# --- regularized problem ------------------------------------------------------


def _grid_points(center: np.ndarray, half_width: float, n: int, bound: float):
    axes = [
        np.linspace(max(-bound, c - half_width), min(bound, c + half_width), n)
        for c in center
    ]
    return [np.array(p) for p in itertools.product(*axes)]


def dual_minimize(model: Cmdp, cost: CostFunction, cap: float) -> tuple[float, np.ndarray]:
    """min over lam in [0, cap]^m of D_h(lam).

    Golden section for one constraint, cyclic coordinate golden section
    for two, projected subgradient for more (subgradient by Danskin:
    V_g of the scalarized-optimal policy minus the conjugate maximizer).
    """
    m = model.num_constraints
    bound = relaxation_bound(model.gamma)

    def dh(lam_vec):
        return dual_regularized(model, cost, lam_vec)

    if m == 0:
        return dh(np.zeros(0)), np.zeros(0)
    if m == 1:
        x, value = golden_min(lambda x: dh(np.array([x])), 0.0, cap, tol=1e-7)
        return value, np.array([x])
    if m == 2:
        # the piecewise-linear dual can trap a pure coordinate search on a
        # diagonal kink ridge (observed on the three-location monitor), so
        # the sweep also searches both diagonals and finishes with a
        # shrinking 5x5 stencil around the incumbent
        directions = (np.array([1.0, 0.0]), np.array([0.0, 1.0]),
                      np.array([1.0, 1.0]) / math.sqrt(2.0),
                      np.array([1.0, -1.0]) / math.sqrt(2.0))
        lam = np.zeros(2)
        value = dh(lam)
        for _ in range(120):
            prev = value
            for d in directions:
                t_lo, t_hi = -np.inf, np.inf
                for i in range(2):
                    if d[i] > 0:
                        t_lo = max(t_lo, (0.0 - lam[i]) / d[i])
                        t_hi = min(t_hi, (cap - lam[i]) / d[i])
                    elif d[i] < 0:
                        t_lo = max(t_lo, (cap - lam[i]) / d[i])
                        t_hi = min(t_hi, (0.0 - lam[i]) / d[i])
                if t_hi - t_lo < 1e-12:
                    continue
                t_best, v_best = golden_min(lambda t, d=d: dh(lam + t * d),
                                            t_lo, t_hi, tol=1e-7)
                if v_best < value:
                    lam = np.clip(lam + t_best * d, 0.0, cap)
                    value = v_best
            if prev - value < 1e-11 * max(1.0, abs(value)):
                break
        half = 0.05 * cap
        for _ in range(6):
            grid = [np.clip(lam + np.array([i, j]) * half / 2.0, 0.0, cap)
                    for i in (-2, -1, 0, 1, 2) for j in (-2, -1, 0, 1, 2)]
            vals = [dh(p) for p in grid]
            k = int(np.argmin(vals))
            if vals[k] < value:
                lam, value = grid[k], vals[k]
            half /= 5.0
        return value, lam

    lam = np.zeros(m)
    value = dh(lam)
    best_lam = lam.copy()
    for k in range(1, 4001):
        sol = solve_scalarized_mdp(model, lam)
        bundle = evaluate_policy(model, sol.policy)
        _, xi_arg = _conjugate_xi_part(cost, lam, bound)
        sub = bundle.v_utils_rho - xi_arg
        lam = np.clip(lam - (1.0 / math.sqrt(k)) * sub, 0.0, cap)
        current = dh(lam)
        if current < value:
            value, best_lam = current, lam.copy()
    return value, best_lam


def solve_regularized(model: Cmdp, cost: CostFunction, xi_grid_resolution: int = 41,
                      lambda_search: float = 100.0) -> OracleReport:
    """Regularized optimum V_h* = max {V_r(rho) - h(xi)} s.t. V_g >= xi.

    Primal path: maximize V*(xi) - h(xi) over a uniform xi grid (LP per
    point) with three local refinement rounds shrinking the window by 5x.
    Dual path: `dual_minimize` over [0, lambda_search]^m. Status is
    "optimal" only when the two independent paths agree within
    TOL.duality_agree; the grid path is limited to m <= 2 (every shipped
    experiment), while `dual_minimize` itself accepts any m.
    """
    m = model.num_constraints
    bound = relaxation_bound(model.gamma)
    if m > 2:
        raise ConfigError("the grid (primal) path supports at most two constraints; "
                          "use dual_minimize for a dual-only bound")

    dual_value, lam_star = dual_minimize(model, cost, lambda_search)

    if m == 0:
        sol = solve_scalarized_mdp(model, np.zeros(0))
        return OracleReport(status="optimal", primal_value=sol.value,
                            dual_value=float(dual_value), xi_star=np.zeros(0),
                            lambda_star=lam_star, policy=sol.policy)

    # primal path: grid + 3 refinement rounds, factor 5
    n = int(xi_grid_resolution)
    if n < 3:
        raise ConfigError("xi_grid_resolution must be >= 3")
    best_val = -np.inf
    best_xi = None
    best_policy = None
    center = np.zeros(m)
    half = bound
    for _ in range(4):  # initial grid + 3 refinements
        for xi in _grid_points(center, half, n, bound):
            report = solve_occupancy_lp(model, xi)
            if report.status != "optimal":
                continue
            val = report.primal_value - cost.value(xi)
            if val > best_val:
                best_val, best_xi, best_policy = val, xi, report.policy
        if best_xi is None:
            break
        center = best_xi
        half /= 5.0

    if best_xi is None:
        return OracleReport(status="infeasible", dual_value=float(dual_value),
                            lambda_star=lam_star)

    gap = float(dual_value) - float(best_val)
    if abs(gap) <= TOL.duality_agree:
        status = "optimal"
    elif abs(gap) <= TOL.duality_fail and np.any(lam_star > lambda_search * (1 - 1e-6)):
        status = "unbounded-dual-cap"
    else:
        raise OracleDiagnosticsError(
            f"primal {best_val:.8g} and dual {dual_value:.8g} disagree by {gap:.3g} "
            f"(grid too coarse or multiplier cap too small)"
        )
    return OracleReport(status=status, primal_value=float(best_val),
                        dual_value=float(dual_value), xi_star=best_xi,
                        lambda_star=lam_star, policy=best_policy)


def equilibrium_residual(model: Cmdp, cost: CostFunction, xi, delta: float = 1e-3):
    """Finite-difference check that grad h(xi) is a supergradient of V*.

    Returns (residual, one_sided) where residual_i is the central (or
    one-sided, flagged) difference slope of V* minus grad h(xi)_i. Small
    residuals certify a resilient equilibrium numerically.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    m = model.num_constraints
    base = solve_occupancy_lp(model, xi)
    if base.status != "optimal":
        raise ConfigError("equilibrium residual requires a feasible base point")
    grad = cost.grad(xi)
    residual = np.zeros(m)
    one_sided = np.zeros(m, dtype=bool)
    for i in range(m):
        up = xi.copy()
        up[i] += delta
        down = xi.copy()
        down[i] -= delta
        r_up = solve_occupancy_lp(model, np.clip(up, -relaxation_bound(model.gamma),
                                                 relaxation_bound(model.gamma)))
        r_down = solve_occupancy_lp(model, np.clip(down, -relaxation_bound(model.gamma),
                                                   relaxation_bound(model.gamma)))
        if r_up.status == "optimal" and r_down.status == "optimal":
            slope = (r_up.primal_value - r_down.primal_value) / (2.0 * delta)
        elif r_down.status == "optimal":
            slope = (base.primal_value - r_down.primal_value) / delta
            one_sided[i] = True
        elif r_up.status == "optimal":
            slope = (r_up.primal_value - base.primal_value) / delta
            one_sided[i] = True
        else:
            raise NumericalError(f"both xi perturbations infeasible on coordinate {i}")
        residual[i] = slope - grad[i]
    return residual, one_sided
