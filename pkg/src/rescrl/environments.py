"""Builders for the three experiment environments plus feasibility probes.

All builders produce models that pass `validate_cmdp`. Per-step rewards
above 1 (the monitoring problems use 1.2) are stored scaled into [0, 1]
with their thresholds rescaled by the same factor, which preserves the
constraint set exactly while keeping the [0, 1] table bounds every value
invariant relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import Cmdp, validate_cmdp
from .oracle import optimal_table_value

__all__ = [
    "EnvSpec",
    "gen_random_cmdp",
    "build_monitor3",
    "build_grid_monitor",
    "build_from_spec",
    "max_utility_value",
    "DEFAULT_AREAS",
]

# inclusive (row_lo, row_hi, col_lo, col_hi) cell ranges; the paper's plot
# shows three separated areas without coordinates, so these are a stated,
# fully configurable choice
DEFAULT_AREAS = ((0, 2, 0, 2), (7, 9, 0, 2), (7, 9, 7, 9))


@dataclass(frozen=True)
class EnvSpec:
    """Declarative environment spec; `params` are kind-specific."""

    kind: str  # "random" | "monitor3" | "grid_monitor"
    params: dict = field(default_factory=dict)


def _check(model: Cmdp) -> Cmdp:
    problems = validate_cmdp(model)
    if problems:
        raise ConfigError("builder produced an invalid model: " + "; ".join(problems))
    return model


def gen_random_cmdp(seed: int, num_states: int, num_actions: int,
                    num_constraints: int, gamma: float,
                    threshold: float | None = None) -> Cmdp:
    """Random tabular CMDP, deterministic in `seed`.

    PRNG: numpy PCG64 seeded through SeedSequence(seed).spawn, one child
    stream per (s, a) pair for transitions and one per table otherwise, so
    adding constraints never perturbs the transition kernel.

    Transition rows normalize i.i.d. uniform(0,1) draws; rewards are
    i.i.d. uniform[0,1]. Utilities are u_i = (z+1)/2 for z ~ U[-1,1], the
    widest symmetric range the u in [0,1] model bound permits. The default
    threshold b_i = 1/(2(1-gamma)) centers the translated utilities at
    zero (g_i = z/2); raising it toward 1/(1-gamma) tightens the nominal
    constraint until it becomes infeasible, the regime the resilient
    experiments probe.
    """
    if min(num_states, num_actions) < 1 or num_constraints < 0:
        raise ConfigError("sizes must be >= 1 (constraints >= 0)")
    root = np.random.SeedSequence(int(seed))
    trans_seq, reward_seq, util_seq = root.spawn(3)

    transitions = np.empty((num_states, num_actions, num_states))
    pair_seqs = trans_seq.spawn(num_states * num_actions)
    for s in range(num_states):
        for a in range(num_actions):
            rng = np.random.Generator(np.random.PCG64(pair_seqs[s * num_actions + a]))
            row = rng.uniform(0.0, 1.0, num_states)
            transitions[s, a] = row / row.sum()

    reward = np.random.Generator(np.random.PCG64(reward_seq)).uniform(
        0.0, 1.0, (num_states, num_actions))

    util_seqs = util_seq.spawn(max(num_constraints, 1))
    utilities = np.empty((num_constraints, num_states, num_actions))
    for i in range(num_constraints):
        rng = np.random.Generator(np.random.PCG64(util_seqs[i]))
        z = rng.uniform(-1.0, 1.0, (num_states, num_actions))
        utilities[i] = (z + 1.0) / 2.0
    if threshold is None:
        threshold = 1.0 / (2.0 * (1.0 - gamma))
    thresholds = np.full(num_constraints, float(threshold))

    return _check(Cmdp(
        num_states=num_states,
        num_actions=num_actions,
        gamma=gamma,
        rho=np.full(num_states, 1.0 / num_states),
        transitions=transitions,
        reward=reward,
        utilities=utilities,
        thresholds=thresholds,
    ))


def _scaled_indicator(indicator: np.ndarray, per_step: float, threshold: float,
                      gamma: float) -> tuple[np.ndarray, float]:
    """Store per_step * indicator in [0,1] and rescale the threshold so the
    constraint V >= threshold is preserved exactly."""
    scale = max(1.0, per_step)
    table = indicator * (per_step / scale)
    new_threshold = threshold / scale
    if not (0.0 < new_threshold <= 1.0 / (1.0 - gamma)):
        raise ConfigError(
            f"threshold {threshold} (scaled {new_threshold:.6g}) outside (0, {1/(1-gamma):.6g}]")
    return table, new_threshold


def build_monitor3(b0: float = 1.0, b1: float = 1.0, b2: float = 1.2,
                   gamma: float = 0.9, c1: float = 7.0, c2: float = 9.0) -> Cmdp:
    """Three-location monitoring chain.

    States are the locations. Both actions exist everywhere with
    state-dependent meaning: at the hub (state 0) action 0 moves to
    state 1 and action 1 to state 2; at state i in {1, 2} action 0
    returns to the hub and action 1 stays put. Per-step payoffs are
    b_i * indicator(state == i); the objective uses i = 0 and the two
    constraints use i = 1, 2 with thresholds c1, c2.
    """
    transitions = np.zeros((3, 2, 3))
    transitions[0, 0, 1] = 1.0
    transitions[0, 1, 2] = 1.0
    for i in (1, 2):
        transitions[i, 0, 0] = 1.0
        transitions[i, 1, i] = 1.0

    def indicator(state: int) -> np.ndarray:
        table = np.zeros((3, 2))
        table[state, :] = 1.0
        return table

    reward = indicator(0) * (b0 / max(1.0, b0))
    u1, t1 = _scaled_indicator(indicator(1), b1, c1, gamma)
    u2, t2 = _scaled_indicator(indicator(2), b2, c2, gamma)

    return _check(Cmdp(
        num_states=3,
        num_actions=2,
        gamma=gamma,
        rho=np.full(3, 1.0 / 3.0),
        transitions=transitions,
        reward=reward,
        utilities=np.stack([u1, u2]),
        thresholds=np.array([t1, t2]),
    ))


def build_grid_monitor(width: int = 10, height: int = 10, areas=DEFAULT_AREAS,
                       b_values=(1.0, 1.0, 1.2), gamma: float = 0.9,
                       thresholds=(7.0, 9.0)) -> Cmdp:
    """Grid-world monitoring: deterministic moves with boundary clamping.

    Actions are left/right/up/down; a move off the grid leaves the state
    unchanged. `areas` lists inclusive (row_lo, row_hi, col_lo, col_hi)
    rectangles for the objective area and the two constrained areas.
    """
    if len(areas) != 3 or len(b_values) != 3 or len(thresholds) != 2:
        raise ConfigError("grid monitor needs 3 areas, 3 payoffs, 2 thresholds")
    n = width * height
    masks = []
    for (r0, r1, c0, c1) in areas:
        if not (0 <= r0 <= r1 < height and 0 <= c0 <= c1 < width):
            raise ConfigError(f"area ({r0},{r1},{c0},{c1}) outside the {height}x{width} grid")
        mask = np.zeros((height, width), dtype=bool)
        mask[r0:r1 + 1, c0:c1 + 1] = True
        masks.append(mask)
    if (masks[0] & masks[1]).any() or (masks[0] & masks[2]).any() or (masks[1] & masks[2]).any():
        raise ConfigError("monitored areas overlap")

    moves = ((0, -1), (0, 1), (-1, 0), (1, 0))  # left, right, up, down
    transitions = np.zeros((n, 4, n))
    for row in range(height):
        for col in range(width):
            s = row * width + col
            for a, (dr, dc) in enumerate(moves):
                nr, nc = row + dr, col + dc
                if not (0 <= nr < height and 0 <= nc < width):
                    nr, nc = row, col
                transitions[s, a, nr * width + nc] = 1.0

    def indicator(mask: np.ndarray) -> np.ndarray:
        table = np.zeros((n, 4))
        table[mask.reshape(-1), :] = 1.0
        return table

    reward = indicator(masks[0]) * (b_values[0] / max(1.0, b_values[0]))
    u1, t1 = _scaled_indicator(indicator(masks[1]), b_values[1], thresholds[0], gamma)
    u2, t2 = _scaled_indicator(indicator(masks[2]), b_values[2], thresholds[1], gamma)

    return _check(Cmdp(
        num_states=n,
        num_actions=4,
        gamma=gamma,
        rho=np.full(n, 1.0 / n),
        transitions=transitions,
        reward=reward,
        utilities=np.stack([u1, u2]),
        thresholds=np.array([t1, t2]),
    ))


def build_from_spec(spec) -> Cmdp:
    """Build a model from an EnvSpec or its dict form {"kind": ..., ...}."""
    if isinstance(spec, EnvSpec):
        kind, params = spec.kind, dict(spec.params)
    elif isinstance(spec, dict):
        params = dict(spec)
        kind = params.pop("kind", None)
    else:
        raise ConfigError(f"cannot build an environment from {type(spec).__name__}")
    if kind == "random":
        threshold = params.pop("threshold", None)
        return gen_random_cmdp(
            seed=int(params.pop("seed", 0)),
            num_states=int(params.pop("num_states", 20)),
            num_actions=int(params.pop("num_actions", 5)),
            num_constraints=int(params.pop("num_constraints", 1)),
            gamma=float(params.pop("gamma", 0.9)),
            threshold=None if threshold is None else float(threshold),
        )
    if kind == "monitor3":
        known = {k: params.pop(k) for k in ("b0", "b1", "b2", "gamma", "c1", "c2")
                 if k in params}
        if params:
            raise ConfigError(f"unknown monitor3 parameters: {sorted(params)}")
        return build_monitor3(**known)
    if kind == "grid_monitor":
        kwargs = {}
        for k in ("width", "height", "gamma"):
            if k in params:
                kwargs[k] = params.pop(k)
        if "areas" in params:
            kwargs["areas"] = [tuple(a) for a in params.pop("areas")]
        if "b_values" in params:
            kwargs["b_values"] = tuple(params.pop("b_values"))
        if "thresholds" in params:
            kwargs["thresholds"] = tuple(params.pop("thresholds"))
        if params:
            raise ConfigError(f"unknown grid_monitor parameters: {sorted(params)}")
        return build_grid_monitor(**kwargs)
    raise ConfigError(f"unknown environment kind {kind!r}")


def max_utility_value(model: Cmdp, constraint_index: int) -> float:
    """max over policies of V_{u_i}(rho): the largest threshold for which
    constraint i alone stays feasible."""
    if not 0 <= constraint_index < model.num_constraints:
        raise ConfigError(f"constraint index {constraint_index} out of range")
    return optimal_table_value(model, model.utilities[constraint_index]).value
