"""Evaluation quantities: average regrets, per-iterate gaps and
violations, and the oscillation statistic used by the sweep figures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algorithms import Trace
from .errors import ConfigError
from .model import Cmdp, Policy, evaluate_policy
from .resilience import CostFunction

__all__ = [
    "MetricsReport",
    "compute_regrets",
    "compute_violations",
    "oscillation_stat",
    "stationarity_residual",
    "compute_metrics",
    "regret_opt_bound",
    "regret_vio_bound",
]


@dataclass(frozen=True)
class MetricsReport:
    regret_opt: float | None
    regret_vio: float | None
    final_gap: float | None
    violations: np.ndarray        # (m,), [xi_T - V_g,T]_+
    tightness: float              # ||xi_T - V_g,T||_2
    oscillation: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "regret_opt": self.regret_opt,
            "regret_vio": self.regret_vio,
            "final_gap": self.final_gap,
            "violations": self.violations.tolist(),
            "tightness": self.tightness,
            "oscillation": dict(self.oscillation),
        }


def compute_regrets(trace: Trace, v_h_star: float) -> tuple[float, float]:
    """Average optimality gap and summed positive-part violation average.

    Uses the exact online accumulators the run loop maintains at every
    step, so the result does not depend on trace_every.
    """
    if v_h_star is None:
        raise ConfigError("compute_regrets needs the oracle value V_h*")
    if trace.steps < 1:
        raise ConfigError("regrets need at least one algorithm step")
    r_opt = v_h_star - trace.sum_objective / trace.steps
    r_vio = float(np.maximum(trace.sum_deficit / trace.steps, 0.0).sum())
    return float(r_opt), r_vio


def compute_violations(model: Cmdp, policy: Policy, xi) -> tuple[np.ndarray, np.ndarray]:
    """Per-constraint feasibility deficit [xi - V_g]_+ and raw difference."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    bundle = evaluate_policy(model, policy)
    raw = xi - bundle.v_utils_rho
    return np.maximum(raw, 0.0), raw


def oscillation_stat(trace: Trace, window: int) -> dict[str, float]:
    """Max minus min over the final `window` records, per traced series."""
    n = len(trace.iters)
    if window < 1 or window > n:
        raise ConfigError(f"window {window} outside [1, {n}]")
    out = {"v_r": float(trace.v_r[-window:].max() - trace.v_r[-window:].min())}
    for i in range(trace.num_constraints):
        series = trace.xi[-window:, i]
        out[f"xi_{i + 1}"] = float(series.max() - series.min())
    return out


def stationarity_residual(cost: CostFunction, xi, lam) -> float:
    """||grad h(xi) + lam||_inf; near zero at an interior equilibrium."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if xi.size == 0:
        return 0.0
    return float(np.abs(cost.grad(xi) + lam).max())


def compute_metrics(model: Cmdp, trace: Trace, v_h_star: float | None = None,
                    window: int | None = None) -> MetricsReport:
    if v_h_star is not None and trace.steps >= 1:
        regret_opt, regret_vio = compute_regrets(trace, v_h_star)
        final_gap = v_h_star - (float(trace.v_r[-1]) - float(trace.h[-1]))
    else:
        regret_opt = regret_vio = final_gap = None
    raw = trace.xi[-1] - trace.v_g[-1]
    if window is None:
        window = min(len(trace.iters), 200)
    return MetricsReport(
        regret_opt=regret_opt,
        regret_vio=regret_vio,
        final_gap=final_gap,
        violations=np.maximum(raw, 0.0),
        tightness=float(np.linalg.norm(raw)),
        oscillation=oscillation_stat(trace, window),
    )


def regret_opt_bound(m: int, grad_lipschitz: float, horizon: int) -> float:
    """Literal average-optimality bound m(7+(L_h+1)^2)/sqrt(T) for the
    simultaneous solver run at eta = 1/sqrt(T)."""
    return m * (7.0 + (grad_lipschitz + 1.0) ** 2) / math.sqrt(horizon)


def regret_vio_bound(m: int, grad_lipschitz: float, cap: float, gamma: float,
                     horizon: int) -> float:
    """Literal violation bound ((8+(L_h+1)^2)m/C + mC)/((1-gamma)^2 sqrt(T))."""
    num = (8.0 + (grad_lipschitz + 1.0) ** 2) * m / cap + m * cap
    return num / ((1.0 - gamma) ** 2 * math.sqrt(horizon))
