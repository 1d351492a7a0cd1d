"""Fixed environments shared by the verification suite, tests and scripts.

All rewards lie in [0, 1]. Every MDP here is proper: each policy reaches the
single terminal state with probability 1.
"""
from __future__ import annotations

import numpy as np

from .env import Mdp

BANDIT3 = (1.0, 0.5, 0.0)


def chain3() -> Mdp:
    """Two decision states and a terminal; the detour through state 1 pays more."""
    P = np.zeros((3, 2, 3))
    P[0, 0, 1] = 1.0
    P[0, 1, 2] = 1.0
    P[1, 0, 2] = 1.0
    P[1, 1, 0] = P[1, 1, 2] = 0.5
    P[2, :, 2] = 1.0
    R = np.array([[0.0, 0.5], [1.0, 0.3], [0.0, 0.0]])
    return Mdp(3, 2, P, [1.0, 0.0, 0.0], frozenset({2}), R)


def ladder4() -> Mdp:
    """Three rungs above a terminal; climbing is slow but pays more higher up."""
    S, A = 4, 3
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    for s in range(3):
        P[s, 0, s + 1] = 0.8
        P[s, 0, s] = 0.2
        R[s, 0] = 0.1 * (s + 1)
        P[s, 1, 3] = 1.0
        R[s, 1] = 0.4
        P[s, 2, s] = 0.5
        P[s, 2, s + 1] = 0.5
        R[s, 2] = 0.25
    P[3, :, 3] = 1.0
    return Mdp(S, A, P, [0.6, 0.3, 0.1, 0.0], frozenset({3}), R)


def random_proper_mdp(num_states: int = 5, num_actions: int = 4, seed: int = 7,
                      exit_prob: float = 0.2) -> Mdp:
    """Random dense MDP whose last state is terminal and entered with at least ``exit_prob`` per step."""
    rng = np.random.default_rng(seed)
    S, A = num_states, num_actions
    T = S - 1
    P = np.zeros((S, A, S))
    P[:T, :, :T] = rng.dirichlet(np.ones(T), size=(T, A)) * (1.0 - exit_prob)
    P[:T, :, T] = exit_prob
    P[T, :, T] = 1.0
    R = np.zeros((S, A))
    R[:T] = rng.uniform(0.0, 1.0, size=(T, A))
    mu0 = np.zeros(S)
    mu0[:T] = 1.0 / T
    return Mdp(S, A, P, mu0, frozenset({T}), R)


def random5() -> Mdp:
    return random_proper_mdp(5, 4, seed=7)


MDPS = {"chain3": chain3, "ladder4": ladder4, "random5": random5}
