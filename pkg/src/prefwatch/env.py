"""Tabular environments, ground-truth value functions and Boltzmann policies.

Everything is indexed ``[state, action]`` (and ``[state, action, next_state]``
for transitions). A stateless bandit is a table with a single row. Argmax ties
always go to the lowest index.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivergentMdpError, InvalidArgumentError

PROB_TOL = 1e-9


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def check_distribution(p, axis=-1, name="distribution") -> np.ndarray:
    """Validate probability vectors along ``axis`` within 1e-9 and renormalize them once."""
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise InvalidArgumentError(f"{name}: non-finite entries")
    if np.any(p < -PROB_TOL) or np.any(p > 1 + PROB_TOL):
        raise InvalidArgumentError(f"{name}: entries outside [0, 1]")
    sums = p.sum(axis=axis, keepdims=True)
    if np.any(np.abs(sums - 1.0) > PROB_TOL):
        raise InvalidArgumentError(f"{name}: does not sum to 1 (within {PROB_TOL})")
    p = np.clip(p, 0.0, None)
    return p / p.sum(axis=axis, keepdims=True)


def boltzmann_policy(values, beta: float) -> np.ndarray:
    """Softmax of ``beta * values`` along the last axis.

    Max-subtraction keeps this overflow-free; a row of equal values (or beta = 0)
    gives the uniform distribution exactly.
    """
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError("boltzmann_policy: values must be finite")
    if not np.isfinite(beta) or beta < 0:
        raise InvalidArgumentError("boltzmann_policy: beta must be a finite nonnegative number")
    z = beta * v
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class RewardTable:
    """Stateless reward vector R: A -> R, optionally sigma-normalized."""

    values: np.ndarray
    sigma: float | None = None

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or v.size == 0:
            raise InvalidArgumentError("RewardTable: values must be a nonempty vector")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("RewardTable: values must be finite")
        if self.sigma is not None and abs(v.sum() - self.sigma) > PROB_TOL * max(1.0, abs(self.sigma)):
            raise InvalidArgumentError("RewardTable: values do not sum to sigma")
        object.__setattr__(self, "values", v)

    @property
    def num_actions(self) -> int:
        return self.values.size

    def normalized(self, sigma: float) -> "RewardTable":
        v = self.values - self.values.mean() + sigma / self.num_actions
        # absorb the rounding residue so the sum check is exact to ~1 ulp
        v[-1] += sigma - v.sum()
        return RewardTable(v, sigma)


@dataclass(frozen=True)
class QTable:
    """Action-value table Q: S x A -> R.

    ``present`` marks rows that carry an actual prediction; absent rows hold the
    uninformative fill ``sigma(s) / |A|`` so that downstream argmax and norms are
    always defined.
    """

    values: np.ndarray
    sigma: np.ndarray | None = None
    present: np.ndarray | None = None

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2 or v.size == 0:
            raise InvalidArgumentError("QTable: values must be a nonempty (states, actions) matrix")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("QTable: values must be finite")
        object.__setattr__(self, "values", v)
        if self.sigma is not None:
            sig = _frozen(np.broadcast_to(np.asarray(self.sigma, dtype=float), (v.shape[0],)))
            if np.any(np.abs(v.sum(axis=1) - sig) > PROB_TOL * np.maximum(1.0, np.abs(sig))):
                raise InvalidArgumentError("QTable: rows do not sum to sigma(s)")
            object.__setattr__(self, "sigma", sig)
        if self.present is not None:
            object.__setattr__(self, "present", _frozen(self.present, dtype=bool))

    @property
    def num_states(self) -> int:
        return self.values.shape[0]

    @property
    def num_actions(self) -> int:
        return self.values.shape[1]

    def normalized(self, sigma) -> "QTable":
        sig = np.broadcast_to(np.asarray(sigma, dtype=float), (self.num_states,))
        v = self.values - self.values.mean(axis=1, keepdims=True) + sig[:, None] / self.num_actions
        v[:, -1] += sig - v.sum(axis=1)
        return QTable(v, sig, self.present)


def as_matrix(table) -> np.ndarray:
    """(S, A) view of a RewardTable, QTable or array-like."""
    v = np.asarray(getattr(table, "values", table), dtype=float)
    return v[None, :] if v.ndim == 1 else v


@dataclass(frozen=True)
class Mdp:
    num_states: int
    num_actions: int
    transition: np.ndarray
    initial_dist: np.ndarray
    terminals: frozenset = field(default_factory=frozenset)
    reward: np.ndarray | None = None

    def __post_init__(self):
        S, A = int(self.num_states), int(self.num_actions)
        if S < 1 or A < 1:
            raise InvalidArgumentError("Mdp: num_states and num_actions must be positive")
        P = np.asarray(self.transition, dtype=float)
        if P.shape != (S, A, S):
            raise InvalidArgumentError(f"Mdp: transition has shape {P.shape}, expected {(S, A, S)}")
        P = check_distribution(P, axis=2, name="transition")
        mu0 = check_distribution(np.asarray(self.initial_dist, dtype=float), name="initial_dist")
        if mu0.shape != (S,):
            raise InvalidArgumentError("Mdp: initial_dist has the wrong length")
        R = np.zeros((S, A)) if self.reward is None else np.asarray(self.reward, dtype=float)
        if R.shape != (S, A):
            raise InvalidArgumentError(f"Mdp: reward has shape {R.shape}, expected {(S, A)}")
        if not np.all(np.isfinite(R)):
            raise InvalidArgumentError("Mdp: reward must be finite")
        terms = frozenset(int(s) for s in self.terminals)
        for s in terms:
            if not 0 <= s < S:
                raise InvalidArgumentError(f"Mdp: terminal {s} out of range")
            if np.any(np.abs(P[s, :, s] - 1.0) > PROB_TOL):
                raise InvalidArgumentError(f"Mdp: terminal {s} must self-loop")
            if np.any(R[s] != 0.0):
                raise InvalidArgumentError(f"Mdp: terminal {s} must have zero reward")
        object.__setattr__(self, "num_states", S)
        object.__setattr__(self, "num_actions", A)
        object.__setattr__(self, "transition", _frozen(P))
        object.__setattr__(self, "initial_dist", _frozen(mu0))
        object.__setattr__(self, "terminals", terms)
        object.__setattr__(self, "reward", _frozen(R))

    def with_restarts(self) -> "Mdp":
        """Continuing process: leaving a terminal state redraws from ``initial_dist``.

        Used for long single-stream interactions; the episodic Q* is still
        solved on the original absorbing MDP.
        """
        P = np.array(self.transition)
        for s in self.terminals:
            P[s, :, :] = self.initial_dist
        return Mdp(self.num_states, self.num_actions, P, self.initial_dist, frozenset(), self.reward)


def bandit_mdp(reward) -> Mdp:
    """Single-state self-looping MDP for a stateless reward vector."""
    r = np.asarray(getattr(reward, "values", reward), dtype=float)
    A = r.size
    return Mdp(1, A, np.ones((1, A, 1)), np.ones(1), frozenset(), r[None, :])


def solve_q_star(mdp: Mdp, tol: float = 1e-10, max_iter: int = 100_000,
                 horizon: int | None = None, patience: int = 1000) -> QTable:
    """Q*(s,a) = R(s,a) + E[max_a' Q*(s',a')] at gamma = 1.

    With ``horizon`` set, runs time-indexed backward induction and returns the
    first-step slice instead. Otherwise iterates to a fixed point; value growth
    past a divergence threshold, a sup-norm update that stops shrinking for
    ``patience`` sweeps, or hitting ``max_iter`` raises DivergentMdpError.
    """
    R, P = mdp.reward, mdp.transition
    if horizon is not None:
        if horizon < 1:
            raise InvalidArgumentError("horizon must be >= 1")
        V = np.zeros(mdp.num_states)
        Q = R.copy()
        for _ in range(horizon):
            Q = R + P @ V
            V = Q.max(axis=1)
        return QTable(Q)

    nonterm = np.ones(mdp.num_states, dtype=bool)
    nonterm[list(mdp.terminals)] = False
    limit = 1e6 * (1.0 + np.abs(R).max()) * mdp.num_states
    Q = np.zeros_like(R)
    deltas = []
    for k in range(max_iter):
        Q_new = R + P @ Q.max(axis=1)
        Q_new[~nonterm] = 0.0
        delta = float(np.abs(Q_new - Q).max())
        Q = Q_new
        if delta <= tol:
            return QTable(Q)
        if not np.isfinite(delta) or np.abs(Q).max() > limit:
            raise DivergentMdpError(f"values exceeded {limit:g} after {k + 1} sweeps")
        deltas.append(delta)
        if k >= patience and delta >= deltas[k - patience]:
            raise DivergentMdpError(f"Bellman updates stopped contracting (delta={delta:g} after {k + 1} sweeps)")
    raise DivergentMdpError(f"no fixed point within {max_iter} sweeps (last delta={deltas[-1]:g})")


def finite_horizon_plan(mdp: Mdp, horizon: int):
    """Backward induction over a ``horizon``-step episode.

    Returns ``(V, Q, actions)`` with ``V[h]`` the optimal value-to-go before step
    h+1 (``V[horizon] = 0``), ``Q[h]`` the step-(h+1) action values and
    ``actions[h]`` the lowest-index greedy action per state.
    """
    if horizon < 1:
        raise InvalidArgumentError("horizon must be >= 1")
    S = mdp.num_states
    R, P = mdp.reward, mdp.transition
    V = np.zeros((horizon + 1, S))
    Q = np.zeros((horizon, S, mdp.num_actions))
    for h in range(horizon - 1, -1, -1):
        Q[h] = R + P @ V[h + 1]
        V[h] = Q[h].max(axis=1)
    return V, Q, Q.argmax(axis=2)


def finite_horizon_optimal_return(mdp: Mdp, horizon: int) -> float:
    """max over policies of E[sum_{t=1}^{horizon} R(s_t, a_t)] from ``initial_dist``."""
    V, _, _ = finite_horizon_plan(mdp, horizon)
    return float(mdp.initial_dist @ V[0])


def deterministic_policies(actions, num_actions: int) -> np.ndarray:
    """One-hot (T, S, A) policy tensor from a (T, S) integer action array."""
    actions = np.asarray(actions, dtype=int)
    out = np.zeros(actions.shape + (num_actions,))
    np.put_along_axis(out, actions[..., None], 1.0, axis=-1)
    return out


def policy_sequence_rewards(mdp: Mdp, policies) -> np.ndarray:
    """Expected reward at each step of a time-indexed Markov policy sequence.

    ``policies`` is (T, S, A) row-stochastic; the state distribution is pushed
    forward with d_{t+1}(s') = sum_{s,a} d_t(s) p_t(a|s) mu(s'|s,a).
    """
    pol = np.asarray(policies, dtype=float)
    if pol.ndim != 3 or pol.shape[1:] != (mdp.num_states, mdp.num_actions):
        raise InvalidArgumentError(
            f"policy sequence has shape {pol.shape}, expected (T, {mdp.num_states}, {mdp.num_actions})")
    R, P = mdp.reward, mdp.transition
    d = mdp.initial_dist.copy()
    out = np.empty(pol.shape[0])
    for t in range(pol.shape[0]):
        joint = d[:, None] * pol[t]
        out[t] = float((joint * R).sum())
        d = np.einsum("sa,sat->t", joint, P)
    return out


def policy_sequence_return(mdp: Mdp, policies) -> float:
    return float(policy_sequence_rewards(mdp, policies).sum())


def optimal_step_rewards(mdp: Mdp, horizon: int) -> np.ndarray:
    """Per-step expected reward of the horizon-optimal policy (sums to the optimal return)."""
    _, _, acts = finite_horizon_plan(mdp, horizon)
    return policy_sequence_rewards(mdp, deterministic_policies(acts, mdp.num_actions))


def sample_transition(mdp: Mdp, s: int, a: int, rng: np.random.Generator) -> int:
    if s in mdp.terminals:
        return s
    row = mdp.transition[s, a]
    return int(min(np.searchsorted(np.cumsum(row), rng.random(), side="right"), mdp.num_states - 1))


def mdp_from_dict(d: dict) -> Mdp:
    missing = [k for k in ("num_states", "num_actions", "transition", "initial_dist") if k not in d]
    if missing:
        raise InvalidArgumentError(f"MDP document missing keys: {', '.join(missing)}")
    return Mdp(
        num_states=d["num_states"],
        num_actions=d["num_actions"],
        transition=d["transition"],
        initial_dist=d["initial_dist"],
        terminals=frozenset(d.get("terminals", ())),
        reward=d.get("reward"),
    )


def mdp_to_dict(mdp: Mdp) -> dict:
    return {
        "num_states": mdp.num_states,
        "num_actions": mdp.num_actions,
        "transition": mdp.transition.tolist(),
        "initial_dist": mdp.initial_dist.tolist(),
        "terminals": sorted(mdp.terminals),
        "reward": mdp.reward.tolist(),
    }


def load_mdp(path) -> Mdp:
    with open(Path(path)) as fh:
        return mdp_from_dict(json.load(fh))
