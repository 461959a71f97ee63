"""Shared instances and independent reference computations.

The reference helpers here deliberately avoid the library's own solve
paths (power iteration instead of LU solves, exhaustive enumeration
instead of value iteration, scalar arithmetic instead of vectorized
projections) so they can serve as oracles for the fast implementations.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from rescrl import Cmdp, Policy, gen_random_cmdp


def random_policy(rng: np.random.Generator, num_states: int, num_actions: int) -> Policy:
    probs = rng.uniform(0.1, 1.0, (num_states, num_actions))
    return Policy(probs / probs.sum(axis=1, keepdims=True))


def bellman_power_iteration(model: Cmdp, policy: Policy, table: np.ndarray,
                            steps: int = 10_000) -> np.ndarray:
    """Reference V by iterating the Bellman operator from zero."""
    p_pi = np.einsum("sa,sat->st", policy.probs, model.transitions)
    c_pi = (policy.probs * table).sum(axis=1)
    v = np.zeros(model.num_states)
    for _ in range(steps):
        v = c_pi + model.gamma * (p_pi @ v)
    return v


def enumerate_deterministic_policies(num_states: int, num_actions: int):
    for choice in itertools.product(range(num_actions), repeat=num_states):
        probs = np.zeros((num_states, num_actions))
        probs[np.arange(num_states), choice] = 1.0
        yield Policy(probs)


def single_state_model(r: float = 1.0, u: float = 1.0, b: float = 1.0,
                       gamma: float = 0.9) -> Cmdp:
    return Cmdp(
        num_states=1, num_actions=1, gamma=gamma,
        rho=np.array([1.0]),
        transitions=np.ones((1, 1, 1)),
        reward=np.array([[r]]),
        utilities=np.array([[[u]]]),
        thresholds=np.array([b]),
    )


def two_state_cycle(gamma: float = 0.5) -> Cmdp:
    """Deterministic two-state cycle with a single action."""
    transitions = np.zeros((2, 1, 2))
    transitions[0, 0, 1] = 1.0
    transitions[1, 0, 0] = 1.0
    return Cmdp(
        num_states=2, num_actions=1, gamma=gamma,
        rho=np.array([1.0, 0.0]),
        transitions=transitions,
        reward=np.array([[1.0], [0.0]]),
        utilities=np.zeros((0, 2, 1)),
        thresholds=np.zeros(0),
    )


def hand_instance() -> Cmdp:
    """Two-state, two-action deterministic CMDP used by the step oracles."""
    transitions = np.zeros((2, 2, 2))
    transitions[0, 0, 0] = 1.0  # stay
    transitions[0, 1, 1] = 1.0  # switch
    transitions[1, 0, 1] = 1.0  # stay
    transitions[1, 1, 0] = 1.0  # switch
    return Cmdp(
        num_states=2, num_actions=2, gamma=0.5,
        rho=np.array([0.6, 0.4]),
        transitions=transitions,
        reward=np.array([[1.0, 0.3], [0.0, 0.8]]),
        utilities=np.array([[[0.2, 0.9], [0.6, 0.1]]]),
        thresholds=np.array([1.0]),
    )


@pytest.fixture(scope="session")
def small_random_model() -> Cmdp:
    return gen_random_cmdp(seed=1, num_states=6, num_actions=3,
                           num_constraints=1, gamma=0.9, threshold=9.0)


@pytest.fixture(scope="session")
def paper_shape_model() -> Cmdp:
    """The 20x5 single-constraint instance with an infeasible nominal
    constraint, the shape every convergence experiment uses."""
    return gen_random_cmdp(seed=1, num_states=20, num_actions=5,
                           num_constraints=1, gamma=0.9, threshold=9.0)
