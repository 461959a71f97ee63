"""Tabular constrained-MDP model, exact policy evaluation, and shared
projection primitives.

Everything here is pure and operates on immutable inputs: model tables are
stored as read-only numpy arrays, evaluation uses one dense LU solve per
policy (documented working range |S| <= 2000), and both projections are
deterministic with lowest-index tie-breaking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import TOL
from .errors import ConfigError, NumericalError

__all__ = [
    "Cmdp",
    "Policy",
    "ValueBundle",
    "VisitationDistribution",
    "validate_cmdp",
    "translate_constraints",
    "evaluate_policy",
    "policy_values",
    "visitation",
    "project_simplex",
    "greedy_policy",
    "load_env",
    "dump_env",
]


def _frozen(a) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=float))
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Cmdp:
    """Tabular CMDP (S, A, P, r, {u_i}, {b_i}, gamma, rho).

    `translated` is derived at construction: g_i = u_i - (1-gamma)*b_i,
    which turns the threshold constraints V_{u_i}(rho) >= b_i into
    V_{g_i}(rho) >= 0.
    """

    num_states: int
    num_actions: int
    gamma: float
    rho: np.ndarray            # (S,)
    transitions: np.ndarray    # (S, A, S), P[s, a, s']
    reward: np.ndarray         # (S, A)
    utilities: np.ndarray      # (m, S, A)
    thresholds: np.ndarray     # (m,)
    translated: np.ndarray = field(init=False)  # (m, S, A)

    def __post_init__(self):
        s, a = self.num_states, self.num_actions
        object.__setattr__(self, "rho", _frozen(self.rho))
        object.__setattr__(self, "transitions", _frozen(self.transitions))
        object.__setattr__(self, "reward", _frozen(self.reward))
        m = len(self.thresholds)
        object.__setattr__(
            self, "utilities", _frozen(np.asarray(self.utilities, dtype=float).reshape(m, s, a))
        )
        object.__setattr__(self, "thresholds", _frozen(self.thresholds))
        if self.transitions.shape != (s, a, s):
            raise ConfigError(f"transitions shape {self.transitions.shape} != {(s, a, s)}")
        if self.reward.shape != (s, a):
            raise ConfigError(f"reward shape {self.reward.shape} != {(s, a)}")
        if self.rho.shape != (s,):
            raise ConfigError(f"rho shape {self.rho.shape} != {(s,)}")
        object.__setattr__(
            self,
            "translated",
            _frozen(translate_constraints(self.utilities, self.thresholds, self.gamma)),
        )

    @property
    def num_constraints(self) -> int:
        return len(self.thresholds)

    @property
    def value_bound(self) -> float:
        """Upper bound 1/(1-gamma) on any reward/utility value."""
        return 1.0 / (1.0 - self.gamma)


@dataclass(frozen=True)
class Policy:
    """Row-stochastic |S| x |A| table; rows live on the action simplex."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs))

    @staticmethod
    def uniform(num_states: int, num_actions: int) -> "Policy":
        return Policy(np.full((num_states, num_actions), 1.0 / num_actions))

    def check(self) -> None:
        p = self.probs
        if np.any(p < -TOL.policy_row):
            raise NumericalError("policy has negative entries")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > TOL.policy_row):
            raise NumericalError("policy rows do not sum to 1")


@dataclass(frozen=True)
class ValueBundle:
    """Exact values of a policy for the reward and each translated utility."""

    v_reward: np.ndarray        # (S,)
    q_reward: np.ndarray        # (S, A)
    adv_reward: np.ndarray      # (S, A)
    v_utils: np.ndarray         # (m, S)     values of g_i
    q_utils: np.ndarray         # (m, S, A)
    v_reward_rho: float
    v_utils_rho: np.ndarray     # (m,)
    v_scalarized: np.ndarray | None = None   # (S,)  for r + lam.g, when lam given
    q_scalarized: np.ndarray | None = None   # (S, A)
    v_scalarized_rho: float = float("nan")


@dataclass(frozen=True)
class VisitationDistribution:
    """Discounted state-visitation weights d_rho(s); sums to one."""

    d: np.ndarray


def validate_cmdp(model: Cmdp) -> list[str]:
    """Check every model invariant; returns the list of violations.

    Report style: an empty list means the model is valid. Never raises,
    never mutates.
    """
    problems: list[str] = []
    s, a, m = model.num_states, model.num_actions, model.num_constraints
    if s < 1 or a < 1:
        problems.append("num_states and num_actions must be >= 1")
    if not (0.0 <= model.gamma < 1.0):
        problems.append(f"gamma={model.gamma} outside [0, 1)")

    row_sums = model.transitions.sum(axis=2)
    bad = np.argwhere(np.abs(row_sums - 1.0) > TOL.row_sum)
    for (bs, ba) in bad[:10]:
        problems.append(f"transition row (s={bs}, a={ba}) sums to {row_sums[bs, ba]:.12g}")
    if np.any(model.transitions < 0):
        problems.append("transitions contain negative entries")

    if abs(model.rho.sum() - 1.0) > TOL.row_sum:
        problems.append(f"rho sums to {model.rho.sum():.12g}")
    if np.any(model.rho < 0):
        problems.append("rho contains negative entries")

    if np.any(model.reward < 0) or np.any(model.reward > 1):
        problems.append("reward entries outside [0, 1]")
    if m and (np.any(model.utilities < 0) or np.any(model.utilities > 1)):
        problems.append("utility entries outside [0, 1]")
    bound = model.value_bound
    for i, b in enumerate(model.thresholds):
        if not (0.0 < b <= bound):
            problems.append(f"threshold b_{i}={b} outside (0, {bound:.6g}]")
    if m and (np.any(model.translated < -1) or np.any(model.translated > 1)):
        problems.append("translated utility entries outside [-1, 1]")
    return problems


def translate_constraints(utilities, thresholds, gamma: float) -> np.ndarray:
    """g_i = u_i - (1-gamma)*b_i for each constraint i."""
    utilities = np.asarray(utilities, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    bound = 1.0 / (1.0 - gamma)
    if np.any(thresholds <= 0) or np.any(thresholds > bound + TOL.row_sum):
        raise ConfigError(f"thresholds must lie in (0, {bound:.6g}]")
    if utilities.size == 0:
        return utilities.reshape(thresholds.shape[0], *utilities.shape[1:])
    return utilities - (1.0 - gamma) * thresholds[:, None, None]


def _transition_matrix(model: Cmdp, policy: Policy) -> np.ndarray:
    """State-to-state kernel P_pi(s, s') = sum_a pi(a|s) P(s'|s, a)."""
    return np.einsum("sa,sat->st", policy.probs, model.transitions)


def _solve_values(model: Cmdp, p_pi: np.ndarray, costs_pi: np.ndarray) -> np.ndarray:
    """Solve (I - gamma * P_pi) V = c_pi for each cost column (direct LU)."""
    a_mat = np.eye(model.num_states) - model.gamma * p_pi
    v = np.linalg.solve(a_mat, costs_pi)
    residual = np.abs(a_mat @ v - costs_pi).max() if costs_pi.size else 0.0
    if residual > TOL.solve_residual:
        raise NumericalError(f"policy evaluation residual {residual:.3e} > {TOL.solve_residual}")
    return v


def evaluate_policy(model: Cmdp, policy: Policy, weights=None) -> ValueBundle:
    """Exact V/Q/advantage for the reward and every translated utility.

    When `weights` (a nonnegative multiplier vector of length m) is given,
    the bundle also carries V and Q for the scalarized cost r + lam.g.
    """
    m = model.num_constraints
    p_pi = _transition_matrix(model, policy)

    # stack per-policy costs: column 0 = reward, columns 1..m = g_i
    tables = [model.reward] + [model.translated[i] for i in range(m)]
    costs_pi = np.stack([(policy.probs * t).sum(axis=1) for t in tables], axis=1)
    v = _solve_values(model, p_pi, costs_pi)  # (S, 1+m)

    # Q_c(s,a) = c(s,a) + gamma * sum_s' P(s'|s,a) V_c(s')
    pv = np.einsum("sat,tc->sac", model.transitions, v)
    v_reward = v[:, 0]
    q_reward = model.reward + model.gamma * pv[:, :, 0]
    v_utils = v[:, 1:].T
    q_utils = np.stack(
        [model.translated[i] + model.gamma * pv[:, :, 1 + i] for i in range(m)], axis=0
    ) if m else np.zeros((0, model.num_states, model.num_actions))

    v_sc = q_sc = None
    v_sc_rho = float("nan")
    if weights is not None:
        lam = np.asarray(weights, dtype=float)
        if lam.shape != (m,):
            raise ConfigError(f"multiplier vector has shape {lam.shape}, expected {(m,)}")
        if np.any(lam < 0):
            raise ConfigError("multipliers must be nonnegative")
        v_sc = v_reward + (lam[:, None] * v_utils).sum(axis=0) if m else v_reward.copy()
        q_sc = q_reward + (lam[:, None, None] * q_utils).sum(axis=0) if m else q_reward.copy()
        v_sc_rho = float(model.rho @ v_sc)

    return ValueBundle(
        v_reward=v_reward,
        q_reward=q_reward,
        adv_reward=q_reward - v_reward[:, None],
        v_utils=v_utils,
        q_utils=q_utils,
        v_reward_rho=float(model.rho @ v_reward),
        v_utils_rho=v_utils @ model.rho if m else np.zeros(0),
        v_scalarized=v_sc,
        q_scalarized=q_sc,
        v_scalarized_rho=v_sc_rho,
    )


def policy_values(model: Cmdp, policy: Policy, table: np.ndarray) -> np.ndarray:
    """Exact state values of `policy` for an arbitrary (S, A) cost table."""
    p_pi = _transition_matrix(model, policy)
    cost_pi = (policy.probs * table).sum(axis=1)[:, None]
    return _solve_values(model, p_pi, cost_pi)[:, 0]


def visitation(model: Cmdp, policy: Policy) -> VisitationDistribution:
    """Discounted visitation d = (1-gamma) rho' (I - gamma P_pi)^{-1}."""
    p_pi = _transition_matrix(model, policy)
    a_mat = np.eye(model.num_states) - model.gamma * p_pi.T
    x = np.linalg.solve(a_mat, model.rho)
    residual = np.abs(a_mat @ x - model.rho).max()
    if residual > TOL.solve_residual:
        raise NumericalError(f"visitation residual {residual:.3e} > {TOL.solve_residual}")
    return VisitationDistribution(d=(1.0 - model.gamma) * x)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-and-threshold method, O(A log A): sort descending, find the
    largest prefix whose shifted entries stay positive, subtract the
    prefix threshold and clip. Idempotent and permutation-equivariant.
    """
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ConfigError("cannot project an empty vector onto the simplex")
    if not np.all(np.isfinite(v)):
        raise ConfigError("simplex projection requires finite entries")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


def project_simplex_rows(mat: np.ndarray) -> np.ndarray:
    """Row-wise simplex projection (vectorized over states)."""
    v = np.asarray(mat, dtype=float)
    n = v.shape[1]
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    rho = n - np.argmax(cond[:, ::-1], axis=1) - 1
    tau = css[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.maximum(v - tau[:, None], 0.0)


def greedy_policy(q: np.ndarray) -> Policy:
    """Deterministic argmax policy; ties broken by lowest action index."""
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ConfigError("greedy extraction requires a finite table")
    probs = np.zeros_like(q)
    probs[np.arange(q.shape[0]), q.argmax(axis=1)] = 1.0
    return Policy(probs)


# --- environment JSON schema ------------------------------------------------

_ENV_FIELDS = ("num_states", "num_actions", "gamma", "rho", "transitions",
               "reward", "utilities", "thresholds")


def env_to_dict(model: Cmdp) -> dict:
    return {
        "num_states": model.num_states,
        "num_actions": model.num_actions,
        "gamma": model.gamma,
        "rho": model.rho.tolist(),
        "transitions": model.transitions.tolist(),
        "reward": model.reward.tolist(),
        "utilities": model.utilities.tolist(),
        "thresholds": model.thresholds.tolist(),
    }


def env_from_dict(data: dict) -> Cmdp:
    missing = [k for k in _ENV_FIELDS if k not in data]
    if missing:
        raise ConfigError(f"env spec missing fields: {missing}")
    model = Cmdp(
        num_states=int(data["num_states"]),
        num_actions=int(data["num_actions"]),
        gamma=float(data["gamma"]),
        rho=np.asarray(data["rho"], dtype=float),
        transitions=np.asarray(data["transitions"], dtype=float),
        reward=np.asarray(data["reward"], dtype=float),
        utilities=np.asarray(data["utilities"], dtype=float),
        thresholds=np.asarray(data["thresholds"], dtype=float),
    )
    problems = validate_cmdp(model)
    if problems:
        raise ConfigError("invalid env: " + "; ".join(problems))
    return model


def load_env(path) -> Cmdp:
    with open(Path(path)) as fh:
        return env_from_dict(json.load(fh))


def dump_env(model: Cmdp, path) -> None:
    with open(Path(path), "w") as fh:
        json.dump(env_to_dict(model), fh)
        fh.write("\n")
