"""Evaluation distances between a prediction trace and the ground truth.

Each cumulative measure has a ``*_steps`` companion returning the per-step
increments, so the totals (and any prefix of them) can be rebuilt post hoc.
KL is in nats.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import Mdp, as_matrix, boltzmann_policy, deterministic_policies, optimal_step_rewards, \
    policy_sequence_rewards
from .errors import InvalidArgumentError
from .predictors import PredictionTrace

MEASURES = ("br", "klbp", "l2", "linf")
WEIGHT_RULES = ("sqrt-visit-frequency", "uniform", "custom")


def kl_divergence(p, q) -> float:
    """sum p log(p/q) with 0 log 0 = 0; ``inf`` when p puts mass where q has none."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return float("inf")
    return float(max(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))), 0.0))


def kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise KL for strictly positive distributions (Boltzmann policies)."""
    return np.maximum(np.sum(p * (np.log(p) - np.log(q)), axis=-1), 0.0)


def tv_distance(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())


@dataclass(frozen=True)
class WeightingScheme:
    """State weights v_t(s); the default is sqrt(N_{t-1}(s) / (t - 1)) (zero at t = 1)."""

    rule: str = "sqrt-visit-frequency"
    custom: tuple | None = None

    def __post_init__(self):
        if self.rule not in WEIGHT_RULES:
            raise InvalidArgumentError(f"unknown weighting rule {self.rule!r}")
        if self.rule == "custom":
            if self.custom is None or np.any(np.asarray(self.custom, dtype=float) < 0):
                raise InvalidArgumentError("custom weights must be given and nonnegative")

    def matrix(self, states, num_states: int) -> np.ndarray:
        states = np.asarray(states, dtype=int)
        T = states.size
        if self.rule == "uniform":
            return np.ones((T, num_states))
        if self.rule == "custom":
            w = np.asarray(self.custom, dtype=float)
            return np.broadcast_to(w, (T, num_states)).copy()
        return visit_weights(states, num_states)


def visit_weights(states, num_states: int) -> np.ndarray:
    states = np.asarray(states, dtype=int)
    T = states.size
    onehot = np.zeros((T, num_states))
    onehot[np.arange(T), states] = 1.0
    before = np.vstack([np.zeros((1, num_states)), np.cumsum(onehot, axis=0)[:-1]])
    denom = np.maximum(np.arange(T, dtype=float), 1.0)[:, None]
    return np.sqrt(before / denom)


def _weights(trace: PredictionTrace, weights, states) -> np.ndarray:
    _, pres = trace.matrices()
    T, S = pres.shape
    if not trace.stateful and weights is None:
        return np.ones((T, 1))
    if isinstance(weights, WeightingScheme):
        if states is None:
            raise InvalidArgumentError("a weighting scheme needs the visited state sequence")
        return weights.matrix(states, S)
    if weights is None:
        if states is None:
            raise InvalidArgumentError("stateful measures need weights or the visited state sequence")
        return visit_weights(states, S)
    w = np.asarray(weights, dtype=float)
    return np.broadcast_to(w, (T, S))


def _check_dims(truth: np.ndarray, trace: PredictionTrace) -> np.ndarray:
    vals, _ = trace.matrices()
    if vals.shape[1:] != truth.shape:
        raise InvalidArgumentError(f"trace tables {vals.shape[1:]} do not match truth {truth.shape}")
    return vals


def br_stateless_steps(truth, trace: PredictionTrace) -> np.ndarray:
    r = as_matrix(truth)[0]
    vals = _check_dims(r[None, :], trace)[:, 0, :]
    return r.max() - r[vals.argmax(axis=1)]


def d_br_stateless(truth, trace: PredictionTrace) -> float:
    """max_a* sum_t R*(a*) - R*(argmax R_t)."""
    if len(trace) == 0:
        raise InvalidArgumentError("d_br_stateless: empty trace")
    return float(br_stateless_steps(truth, trace).sum())


def br_stateful_steps(mdp: Mdp, trace: PredictionTrace, horizon: int | None = None) -> np.ndarray:
    """Per-step gap between the horizon-optimal expected reward and that of the greedy predictions.

    Absent rows hold a constant fill, so their greedy action is index 0.
    """
    vals, _ = trace.matrices()
    horizon = len(trace) if horizon is None else horizon
    if horizon != len(trace):
        raise InvalidArgumentError("d_br_stateful: horizon must equal the trace length")
    if vals.shape[1:] != (mdp.num_states, mdp.num_actions):
        raise InvalidArgumentError("d_br_stateful: trace does not match the MDP")
    greedy = deterministic_policies(vals.argmax(axis=2), mdp.num_actions)
    return optimal_step_rewards(mdp, horizon) - policy_sequence_rewards(mdp, greedy)


def d_br_stateful(mdp: Mdp, trace: PredictionTrace, horizon: int | None = None) -> float:
    return float(br_stateful_steps(mdp, trace, horizon).sum())


def klbp_steps(truth, trace: PredictionTrace, beta: float, weights=None, states=None) -> np.ndarray:
    Q = as_matrix(truth)
    vals = _check_dims(Q, trace)
    _, pres = trace.matrices()
    if beta == 0:
        return np.zeros(len(trace))
    kl = kl_rows(boltzmann_policy(vals, beta), boltzmann_policy(Q, beta)[None])
    w = _weights(trace, weights, states)
    return (w * np.where(pres, kl, 0.0)).sum(axis=1)


def d_klbp(truth, trace: PredictionTrace, beta: float, weights=None, states=None) -> float:
    """sum_t sum_s v_t(s) KL(pi_beta(Q_t(s)) || pi_beta(Q*(s))); absent rows contribute nothing."""
    return float(klbp_steps(truth, trace, beta, weights, states).sum())


def norm_steps(truth, trace: PredictionTrace, which: str, weights=None, states=None,
               include_absent: bool = False) -> np.ndarray:
    Q = as_matrix(truth)
    vals = _check_dims(Q, trace)
    _, pres = trace.matrices()
    diff = vals - Q[None]
    if which == "l2":
        n = np.sqrt((diff ** 2).sum(axis=2))
    elif which == "linf":
        n = np.abs(diff).max(axis=2)
    else:
        raise InvalidArgumentError(f"unknown norm {which!r}")
    if not include_absent:
        n = np.where(pres, n, 0.0)
    w = _weights(trace, weights, states)
    return (w * n).sum(axis=1)


def norm_distances(truth, trace: PredictionTrace, which: str, weights=None, states=None,
                   include_absent: bool = False) -> float:
    """Cumulative (state-weighted) l2 or l-inf distance, counted from each state's t_e.

    ``include_absent`` also charges the fill values of not-yet-explored steps.
    """
    return float(norm_steps(truth, trace, which, weights, states, include_absent).sum())
