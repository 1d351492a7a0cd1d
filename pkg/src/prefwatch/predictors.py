"""Prediction strategies (best response, averaging) and the per-step/final reductions.

Online predictors only ever receive ``(state, action)`` pairs. They never see
rewards, the true table, or the learner's estimates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .env import QTable, RewardTable
from .errors import InvalidArgumentError, NotYetExploredError
from .learners import InteractionHistory

PREDICTOR_KINDS = ("best-response", "averaging", "constant-zero")


@dataclass(frozen=True)
class PredictionTrace:
    """Per-step predictions: ``values`` is (T, A) stateless or (T, S, A) stateful.

    ``present`` is (T,) or (T, S); absent entries hold the uniform fill and are
    skipped by the measures that only count explored steps.
    """

    values: np.ndarray
    present: np.ndarray
    kind: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.present, dtype=bool)
        if v.ndim not in (2, 3) or p.shape != v.shape[:-1]:
            raise InvalidArgumentError("PredictionTrace: present mask must match values[..., 0]")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "present", p)

    def __len__(self):
        return self.values.shape[0]

    @property
    def stateful(self) -> bool:
        return self.values.ndim == 3

    @classmethod
    def from_tables(cls, tables, kind: str = "") -> "PredictionTrace":
        vals = np.stack([np.asarray(getattr(t, "values", t), dtype=float) for t in tables])
        pres = []
        for t in tables:
            p = getattr(t, "present", None)
            pres.append(np.ones(vals.shape[1:-1], dtype=bool) if p is None else np.asarray(p, dtype=bool))
        return cls(vals, np.stack(pres), kind)

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """(T, S, A) values and (T, S) mask regardless of stateless/stateful layout."""
        if self.stateful:
            return self.values, self.present
        return self.values[:, None, :], self.present[:, None]


def best_response_predictor(history: InteractionHistory, state_count: int | None = None):
    """Indicator reward on the learner's previous action in each state (action 0 if none yet)."""
    S = history.num_states if state_count is None else state_count
    last = np.where(history.last_action[:S] >= 0, history.last_action[:S], 0)
    Q = np.zeros((S, history.num_actions))
    Q[np.arange(S), last] = 1.0
    return RewardTable(Q[0]) if S == 1 else QTable(Q)


def _invert(counts: np.ndarray, beta: float, sigma) -> np.ndarray:
    """Sigma-normalized table whose Boltzmann policy equals the normalized counts (row-wise)."""
    logp = np.log(counts) - np.log(counts.sum(axis=-1, keepdims=True))
    A = counts.shape[-1]
    return (logp - logp.mean(axis=-1, keepdims=True)) / beta + np.asarray(sigma)[..., None] / A


def averaging_predictor_stateless(counts, beta: float, sigma: float = 0.0) -> RewardTable:
    """R(a) = (log p(a) - mean_a' log p(a')) / beta + sigma / |A| with p the empirical frequencies."""
    n = np.asarray(counts, dtype=float)
    if beta <= 0:
        raise InvalidArgumentError("averaging predictor needs beta > 0")
    if np.any(n <= 0):
        raise NotYetExploredError("every action must have been played before t_e")
    v = _invert(n, beta, float(sigma))
    v[-1] += sigma - v.sum()
    return RewardTable(v, float(sigma))


def averaging_predictor_stateful(counts, beta: float, sigma=0.0) -> QTable:
    """Row-wise averaging strategy; rows with an unseen action are absent and hold sigma(s)/|A|."""
    n = np.asarray(counts, dtype=float)
    if beta <= 0:
        raise InvalidArgumentError("averaging predictor needs beta > 0")
    S, A = n.shape
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (S,))
    present = (n > 0).all(axis=1)
    Q = np.repeat((sig / A)[:, None], A, axis=1)
    if present.any():
        Q[present] = _invert(n[present], beta, sig[present])
        Q[present, -1] += sig[present] - Q[present].sum(axis=1)
    return QTable(Q, sig, present)


class OnlinePredictor:
    """Predictor fed one observed (state, action) at a time."""

    kind = ""

    def __init__(self, num_states: int, num_actions: int):
        self.S, self.A = num_states, num_actions

    def predict(self) -> tuple[np.ndarray, np.ndarray]:
        """(S, A) prediction for the next step and the (S,) presence mask."""
        raise NotImplementedError

    def observe(self, state: int, action: int) -> None:
        raise NotImplementedError


class BestResponse(OnlinePredictor):
    kind = "best-response"

    def __init__(self, num_states, num_actions):
        super().__init__(num_states, num_actions)
        self._Q = np.zeros((num_states, num_actions))
        self._Q[:, 0] = 1.0
        self._present = np.ones(num_states, dtype=bool)

    def predict(self):
        return self._Q, self._present

    def observe(self, state, action):
        self._Q[state] = 0.0
        self._Q[state, action] = 1.0


class Averaging(OnlinePredictor):
    kind = "averaging"

    def __init__(self, num_states, num_actions, beta: float, sigma=0.0):
        super().__init__(num_states, num_actions)
        if beta <= 0:
            raise InvalidArgumentError("averaging predictor needs beta > 0")
        self.beta = beta
        self.sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (num_states,)).copy()
        self.counts = np.zeros((num_states, num_actions))
        self._Q = np.repeat((self.sigma / num_actions)[:, None], num_actions, axis=1)
        self._present = np.zeros(num_states, dtype=bool)

    def predict(self):
        return self._Q, self._present

    def observe(self, state, action):
        self.counts[state, action] += 1
        row = self.counts[state]
        if self._present[state] or row.min() > 0:
            self._present[state] = True
            q = _invert(row, self.beta, self.sigma[state])
            q[-1] += self.sigma[state] - q.sum()
            self._Q[state] = q


class ConstantZero(OnlinePredictor):
    kind = "constant-zero"

    def __init__(self, num_states, num_actions):
        super().__init__(num_states, num_actions)
        self._Q = np.zeros((num_states, num_actions))
        self._present = np.ones(num_states, dtype=bool)

    def predict(self):
        return self._Q, self._present

    def observe(self, state, action):
        pass


def make_predictor(kind: str, num_states: int, num_actions: int, beta: float | None = None,
                   sigma=0.0) -> OnlinePredictor:
    if kind == "best-response":
        return BestResponse(num_states, num_actions)
    if kind == "averaging":
        if beta is None:
            raise InvalidArgumentError("averaging predictor needs beta")
        return Averaging(num_states, num_actions, beta, sigma)
    if kind == "constant-zero":
        return ConstantZero(num_states, num_actions)
    raise InvalidArgumentError(f"unknown predictor {kind!r}; choose from {PREDICTOR_KINDS}")


def run_predictor(predictor: OnlinePredictor, states, actions, kind: str = "") -> PredictionTrace:
    """Replay a behavior stream through an online predictor; step t sees only steps < t."""
    T = len(actions)
    vals = np.empty((T, predictor.S, predictor.A))
    pres = np.empty((T, predictor.S), dtype=bool)
    for t in range(T):
        q, p = predictor.predict()
        vals[t] = q
        pres[t] = p
        predictor.observe(int(states[t]), int(actions[t]))
    if predictor.S == 1:
        return PredictionTrace(vals[:, 0, :], pres[:, 0], kind or predictor.kind)
    return PredictionTrace(vals, pres, kind or predictor.kind)


def reduce_perstep_to_final(trace: PredictionTrace, mode: str, rng: np.random.Generator | None = None) -> RewardTable:
    """Collapse per-step predictions into one final reward table.

    ``average`` takes the elementwise mean, ``sample`` returns a uniformly drawn
    step, ``br-majority`` the indicator on the most frequent per-step argmax.
    """
    if len(trace) == 0:
        raise InvalidArgumentError("reduce_perstep_to_final: empty trace")
    if trace.stateful:
        raise InvalidArgumentError("reduce_perstep_to_final: stateless traces only")
    V = trace.values
    if mode == "average":
        return RewardTable(V.mean(axis=0))
    if mode == "sample":
        if rng is None:
            raise InvalidArgumentError("sample mode needs an rng")
        return RewardTable(V[int(rng.integers(len(trace)))])
    if mode == "br-majority":
        votes = np.bincount(V.argmax(axis=1), minlength=V.shape[1])
        out = np.zeros(V.shape[1])
        out[int(votes.argmax())] = 1.0
        return RewardTable(out)
    raise InvalidArgumentError(f"unknown reduction mode {mode!r}")


def reduce_final_to_perstep(final_predictor: Callable[[InteractionHistory], object],
                            history: InteractionHistory, kind: str = "final-to-perstep") -> PredictionTrace:
    """Call a final-answer predictor on every strict prefix of the history."""
    tables = [final_predictor(history.prefix(t)) for t in range(len(history))]
    return PredictionTrace.from_tables(tables, kind)
