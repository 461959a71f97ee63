"""The two resilient primal-dual solvers and the non-resilient baseline.

Both solvers run simultaneous (Jacobi) projected-gradient updates over the
policy, the relaxation, and the multipliers: the proximal argmax/argmin
forms of the updates are implemented as their closed-form projected steps
(prox of a linear function over a convex set), which unit tests check
against direct numerical minimization.

Update map per step, all gradients taken at the pre-update point:

  policy  <- proj_simplex(policy + eta * Q_{r + lam.g})        (ascent)
  xi      <- proj_box(xi + eta * (-grad h(xi) - lam))          (ascent)
  lam     <- proj_[0,cap](lam - eta * (V_g(rho) - xi))         (descent)

so a violated constraint (V_g < xi) pushes its multiplier up. The
optimistic variant keeps an anchor triple and takes two such steps from
the anchor: first with gradients at the previous intermediate iterate,
then (for the next anchor) with gradients at the new intermediate one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import Cmdp, Policy, ValueBundle, evaluate_policy, project_simplex_rows
from .resilience import CostFunction, MultiplierDomain, cost_from_spec, relaxation_bound

__all__ = [
    "AlgoConfig",
    "ResilientIterate",
    "Trace",
    "respgpd_step",
    "resopgpd_step",
    "run_algorithm",
    "prox_triple",
    "ALGORITHMS",
]

ALGORITHMS = ("respgpd", "resopgpd", "baseline")


@dataclass(frozen=True)
class AlgoConfig:
    algorithm: str
    eta: float
    horizon: int
    cost: CostFunction
    lambda_cap: float = 100.0
    trace_every: int = 1
    seed: int = 0  # reserved for randomized initializations; unused by default

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if not (self.eta > 0):
            raise ConfigError(f"stepsize eta={self.eta} must be > 0")
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if not (self.lambda_cap > 0):
            raise ConfigError("lambda_cap must be > 0")
        if self.trace_every < 1:
            raise ConfigError("trace_every must be >= 1")

    @staticmethod
    def from_dict(data: dict) -> "AlgoConfig":
        try:
            return AlgoConfig(
                algorithm=data["algorithm"],
                eta=float(data["eta"]),
                horizon=int(data["T"]),
                cost=cost_from_spec(data["cost"]),
                lambda_cap=float(data.get("lambda_cap", 100.0)),
                trace_every=int(data.get("trace_every", 1)),
                seed=int(data.get("seed", 0)),
            )
        except KeyError as exc:
            raise ConfigError(f"run config missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class ResilientIterate:
    """Current iterate (pi, xi, lam); the optimistic solver additionally
    carries the anchor triple it steps from."""

    policy: Policy
    xi: np.ndarray
    lam: np.ndarray
    policy_hat: Policy | None = None
    xi_hat: np.ndarray | None = None
    lam_hat: np.ndarray | None = None

    @staticmethod
    def initial(model: Cmdp, with_anchors: bool) -> "ResilientIterate":
        policy = Policy.uniform(model.num_states, model.num_actions)
        zeros = np.zeros(model.num_constraints)
        if with_anchors:
            return ResilientIterate(policy, zeros, zeros.copy(),
                                    policy, zeros.copy(), zeros.copy())
        return ResilientIterate(policy, zeros, zeros.copy())


@dataclass
class Trace:
    """Per-iteration records (subsampled by trace_every, final step always
    kept) plus exact online accumulators over all T pre-step iterates."""

    algorithm: str
    iters: np.ndarray
    v_r: np.ndarray          # (n,)
    v_g: np.ndarray          # (n, m)
    xi: np.ndarray           # (n, m)
    lam: np.ndarray          # (n, m)
    h: np.ndarray            # (n,)
    lagrangian: np.ndarray   # (n,)
    viol: np.ndarray         # (n, m)
    steps: int               # T
    sum_objective: float     # sum over t < T of (V_r - h(xi_t))
    sum_deficit: np.ndarray  # (m,), sum over t < T of (xi_t - V_g_t)
    final: ResilientIterate = field(repr=False)

    @property
    def num_constraints(self) -> int:
        return self.v_g.shape[1]


def prox_triple(base: ResilientIterate, policy_grad: np.ndarray, xi_grad: np.ndarray,
                lam_grad: np.ndarray, eta: float, gamma: float,
                domain: MultiplierDomain) -> tuple[Policy, np.ndarray, np.ndarray]:
    """One projected-gradient triple step from `base`:
    policy and xi ascend their gradients, lam descends lam_grad."""
    bound = relaxation_bound(gamma)
    policy = Policy(project_simplex_rows(base.policy.probs + eta * policy_grad))
    xi = np.clip(base.xi + eta * xi_grad, -bound, bound)
    lam = np.clip(base.lam - eta * lam_grad, 0.0, domain.cap)
    return policy, xi, lam


def _grads(bundle: ValueBundle, xi: np.ndarray, lam: np.ndarray, cost: CostFunction):
    """Gradient pieces of the Lagrangian at (policy-of-bundle, xi, lam)."""
    m = len(lam)
    q_sc = bundle.q_reward if m == 0 else (
        bundle.q_reward + np.tensordot(lam, bundle.q_utils, axes=1))
    xi_grad = -cost.grad(xi) - lam
    lam_grad = bundle.v_utils_rho - xi
    return q_sc, xi_grad, lam_grad


def _respgpd_core(model, cost, state, eta, domain, bundle):
    q_sc, xi_grad, lam_grad = _grads(bundle, state.xi, state.lam, cost)
    policy, xi, lam = prox_triple(state, q_sc, xi_grad, lam_grad, eta,
                                  model.gamma, domain)
    new_state = ResilientIterate(policy, xi, lam)
    return new_state, evaluate_policy(model, policy)


def _resopgpd_core(model, cost, state, eta, domain, bundle, freeze_xi):
    anchor = ResilientIterate(state.policy_hat, state.xi_hat, state.lam_hat)
    # intermediate iterate: step from the anchor, gradients at the previous
    # intermediate iterate
    q_sc, xi_grad, lam_grad = _grads(bundle, state.xi, state.lam, cost)
    policy, xi, lam = prox_triple(anchor, q_sc, xi_grad, lam_grad, eta,
                                  model.gamma, domain)
    if freeze_xi:
        xi = np.zeros_like(xi)
    new_bundle = evaluate_policy(model, policy)
    # next anchor: step from the same anchor, gradients at the new iterate
    q_sc2, xi_grad2, lam_grad2 = _grads(new_bundle, xi, lam, cost)
    policy_hat, xi_hat, lam_hat = prox_triple(anchor, q_sc2, xi_grad2, lam_grad2,
                                              eta, model.gamma, domain)
    if freeze_xi:
        xi_hat = np.zeros_like(xi_hat)
    new_state = ResilientIterate(policy, xi, lam, policy_hat, xi_hat, lam_hat)
    return new_state, new_bundle


def respgpd_step(model: Cmdp, cost: CostFunction, state: ResilientIterate,
                 eta: float, domain: MultiplierDomain) -> ResilientIterate:
    """One simultaneous projected-gradient step (all gradients at `state`)."""
    bundle = evaluate_policy(model, state.policy)
    return _respgpd_core(model, cost, state, eta, domain, bundle)[0]


def resopgpd_step(model: Cmdp, cost: CostFunction, state: ResilientIterate,
                  eta: float, domain: MultiplierDomain,
                  freeze_xi: bool = False) -> ResilientIterate:
    """One optimistic step: intermediate iterate then anchor update."""
    if state.policy_hat is None:
        raise ConfigError("optimistic step needs a state with anchors")
    bundle = evaluate_policy(model, state.policy)
    return _resopgpd_core(model, cost, state, eta, domain, bundle, freeze_xi)[0]


def run_algorithm(model: Cmdp, config: AlgoConfig) -> Trace:
    """Run the configured solver for `horizon` steps from the standard
    initialization (uniform policy, zero relaxation, zero multipliers,
    anchors equal) and collect the trace.

    Deterministic: identical (model, config) give bit-identical traces.
    """
    optimistic = config.algorithm in ("resopgpd", "baseline")
    freeze_xi = config.algorithm == "baseline"
    domain = MultiplierDomain(config.lambda_cap)
    state = ResilientIterate.initial(model, with_anchors=optimistic)
    bundle = evaluate_policy(model, state.policy)

    rows: list[tuple] = []
    sum_objective = 0.0
    sum_deficit = np.zeros(model.num_constraints)

    def record(t: int, st: ResilientIterate, bd: ValueBundle) -> None:
        h_val = config.cost.value(st.xi)
        lag = bd.v_reward_rho + float(st.lam @ bd.v_utils_rho) - h_val - float(st.lam @ st.xi)
        rows.append((t, bd.v_reward_rho, bd.v_utils_rho.copy(), st.xi.copy(),
                     st.lam.copy(), h_val, lag,
                     np.maximum(st.xi - bd.v_utils_rho, 0.0)))

    for t in range(config.horizon):
        if t % config.trace_every == 0:
            record(t, state, bundle)
        sum_objective += bundle.v_reward_rho - config.cost.value(state.xi)
        sum_deficit += state.xi - bundle.v_utils_rho
        if optimistic:
            state, bundle = _resopgpd_core(model, config.cost, state, config.eta,
                                           domain, bundle, freeze_xi)
        else:
            state, bundle = _respgpd_core(model, config.cost, state, config.eta,
                                          domain, bundle)
    record(config.horizon, state, bundle)

    m = model.num_constraints
    return Trace(
        algorithm=config.algorithm,
        iters=np.array([r[0] for r in rows], dtype=int),
        v_r=np.array([r[1] for r in rows]),
        v_g=np.array([r[2] for r in rows]).reshape(len(rows), m),
        xi=np.array([r[3] for r in rows]).reshape(len(rows), m),
        lam=np.array([r[4] for r in rows]).reshape(len(rows), m),
        h=np.array([r[5] for r in rows]),
        lagrangian=np.array([r[6] for r in rows]),
        viol=np.array([r[7] for r in rows]).reshape(len(rows), m),
        steps=config.horizon,
        sum_objective=sum_objective,
        sum_deficit=sum_deficit,
        final=state,
    )
