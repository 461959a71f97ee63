"""Relaxation cost functions, the relaxation/multiplier domains, and the
regularized Lagrangian.

The relaxation vector xi loosens (xi_i < 0) or tightens (xi_i > 0) the
i-th translated constraint V_{g_i}(rho) >= xi_i; its cost h(xi) prices the
departure from the nominal problem, with h(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import Cmdp, Policy, evaluate_policy

__all__ = [
    "CostFunction",
    "QuadraticCost",
    "cost_from_spec",
    "Relaxation",
    "MultiplierDomain",
    "cost_eval",
    "project_relaxation",
    "project_multiplier",
    "lagrangian",
    "relaxation_bound",
]


class CostFunction:
    """Interface for relaxation costs: value, gradient, and the two
    curvature constants the solvers and theory checks consume."""

    def value(self, xi: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def grad_lipschitz(self) -> float:
        raise NotImplementedError

    @property
    def strong_convexity(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class QuadraticCost(CostFunction):
    """h(xi) = alpha * ||xi||^2, the cost used in every experiment.

    Gradient 2*alpha*xi; both the gradient-Lipschitz constant and the
    strong-convexity constant equal 2*alpha.
    """

    alpha: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"cost weight alpha={self.alpha} must be nonnegative")

    def value(self, xi) -> float:
        xi = np.asarray(xi, dtype=float)
        return float(self.alpha * (xi * xi).sum())

    def grad(self, xi) -> np.ndarray:
        return 2.0 * self.alpha * np.asarray(xi, dtype=float)

    @property
    def grad_lipschitz(self) -> float:
        return 2.0 * self.alpha

    @property
    def strong_convexity(self) -> float:
        return 2.0 * self.alpha


def cost_from_spec(spec: dict) -> CostFunction:
    """Build a cost function from the run-config JSON form
    {"kind": "quadratic", "alpha": <number>}."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("cost spec must be an object with a 'kind' field")
    if spec["kind"] == "quadratic":
        if "alpha" not in spec:
            raise ConfigError("quadratic cost spec requires 'alpha'")
        return QuadraticCost(alpha=float(spec["alpha"]))
    raise ConfigError(f"unknown cost kind {spec['kind']!r}")


@dataclass(frozen=True)
class Relaxation:
    """Per-constraint relaxation vector, boxed by |xi_i| <= 1/(1-gamma)."""

    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))


@dataclass(frozen=True)
class MultiplierDomain:
    """Box [0, cap]^m for the dual variables."""

    cap: float

    def __post_init__(self):
        if not (self.cap > 0 and np.isfinite(self.cap)):
            raise ConfigError(f"multiplier cap {self.cap} must be positive and finite")


def relaxation_bound(gamma: float) -> float:
    return 1.0 / (1.0 - gamma)


def cost_eval(cost: CostFunction, xi) -> tuple[float, np.ndarray]:
    """Return (h(xi), grad h(xi))."""
    xi = xi.xi if isinstance(xi, Relaxation) else np.asarray(xi, dtype=float)
    return cost.value(xi), cost.grad(xi)


def project_relaxation(xi, gamma: float) -> np.ndarray:
    """Coordinate-wise clamp to [-1/(1-gamma), 1/(1-gamma)]."""
    bound = relaxation_bound(gamma)
    return np.clip(np.asarray(xi, dtype=float), -bound, bound)


def project_multiplier(lam, domain: MultiplierDomain) -> np.ndarray:
    """Coordinate-wise clamp to [0, cap]."""
    return np.clip(np.asarray(lam, dtype=float), 0.0, domain.cap)


def lagrangian(model: Cmdp, policy: Policy, xi, lam, cost: CostFunction) -> float:
    """L_h(pi, xi; lam) = V_{r+lam.g}(rho) - h(xi) - lam.xi (exact)."""
    xi = xi.xi if isinstance(xi, Relaxation) else np.asarray(xi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    bundle = evaluate_policy(model, policy, weights=lam)
    return bundle.v_scalarized_rho - cost.value(xi) - float(lam @ xi)
