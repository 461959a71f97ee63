"""Resilient constrained-MDP solver suite.

Tabular CMDP model with exact policy evaluation, two provably convergent
primal-dual solvers that search jointly over the policy and a constraint
relaxation, an independent LP/dual optimality oracle, the experiment
environments, and evaluation metrics.
"""

from .algorithms import (ALGORITHMS, AlgoConfig, ResilientIterate, Trace,
                         prox_triple, resopgpd_step, respgpd_step, run_algorithm)
from .constants import TOL, Tolerances
from .environments import (DEFAULT_AREAS, EnvSpec, build_from_spec, build_grid_monitor,
                           build_monitor3, gen_random_cmdp, max_utility_value)
from .errors import (ConfigError, LpSolverError, NumericalError,
                     OracleDiagnosticsError, RescrlError)
from .metrics import (MetricsReport, compute_metrics, compute_regrets,
                      compute_violations, oscillation_stat, regret_opt_bound,
                      regret_vio_bound, stationarity_residual)
from .model import (Cmdp, Policy, ValueBundle, VisitationDistribution, dump_env,
                    env_from_dict, env_to_dict, evaluate_policy, greedy_policy,
                    load_env, policy_values, project_simplex, translate_constraints,
                    validate_cmdp, visitation)
from .oracle import (OccupancyLp, OracleReport, ScalarizedSolution, dual_minimize, dual_perturbed,
                     dual_regularized, equilibrium_residual, golden_min,
                     optimal_table_value, primal_value_map, solve_occupancy_lp,
                     solve_regularized, solve_scalarized_mdp)
from .resilience import (CostFunction, MultiplierDomain, QuadraticCost, Relaxation,
                         cost_eval, cost_from_spec, lagrangian, project_multiplier,
                         project_relaxation, relaxation_bound)
from .simplex import LpResult, solve_lp

__version__ = "0.1.0"
