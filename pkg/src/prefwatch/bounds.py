"""Computable forms of the guarantees, plus the impossibility construction.

Bound values that fall outside their domain come back as ``None`` (reported
as "not-applicable"), never as a number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .env import RewardTable, boltzmann_policy
from .errors import InvalidArgumentError
from .learners import EstimateSchedule
from .measures import norm_distances
from .predictors import PredictionTrace


def _log_term(action_count: int, state_count: int, T: int, epsilon: float) -> float:
    if not 0.0 < epsilon < 1.0:
        raise InvalidArgumentError("epsilon must lie in (0, 1)")
    if T < 2:
        raise InvalidArgumentError("T must be >= 2")
    return math.log(2.0 * state_count * action_count * (T - 1) / epsilon)


def concentration_radius(t, action_count: int, state_count: int = 1, T: int | None = None,
                         epsilon: float = 0.1, visit_count=None):
    """sqrt(2 log(2|S||A|(T-1)/eps) / n) with n = t - 1, or the state's visit count N_{t-1}(s)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 2):
        raise InvalidArgumentError("concentration_radius: t must be >= 2")
    T = int(t_arr.max()) if T is None else T
    lt = _log_term(action_count, state_count, T, epsilon)
    n = t_arr - 1.0 if visit_count is None else np.asarray(visit_count, dtype=float)
    if np.any(n <= 0):
        raise InvalidArgumentError("concentration_radius: visit count must be positive")
    r = np.sqrt(2.0 * lt / n)
    return float(r) if np.ndim(r) == 0 else r


@dataclass(frozen=True)
class BoundInputs:
    """Run quantities the l-inf guarantee is evaluated on.

    ``kappa`` is indexed by step (and state): entry t-1 holds kappa_t, NaN
    where undefined. ``visit_counts[t-1, s]`` is N_{t-1}(s) (stateful only).
    ``t_e`` is an int (or None) stateless, an (S,) array stateful with 0 for
    never-explored states.
    """

    T: int
    epsilon: float
    beta: float
    action_count: int
    state_count: int
    kappa: np.ndarray
    f: EstimateSchedule | Callable
    t_e: object
    visit_counts: np.ndarray | None = None

    def f_of(self, n):
        return self.f.f(n) if isinstance(self.f, EstimateSchedule) else np.asarray(self.f(n), dtype=float)


def linfty_bound_terms(inputs: BoundInputs, stateful: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Per-step summands (concentration, learner) of the l-inf guarantee, zero before t_e."""
    T, beta = inputs.T, inputs.beta
    if beta <= 0:
        raise InvalidArgumentError("beta must be positive")
    lt = _log_term(inputs.action_count, inputs.state_count if stateful else 1, T, inputs.epsilon)
    t = np.arange(1, T + 1, dtype=float)
    conc = np.zeros(T)
    learn = np.zeros(T)
    if not stateful:
        te = inputs.t_e
        if te is None or te == 0 or te > T:
            return conc, learn
        idx = np.arange(te - 1, T)
        kap = np.asarray(inputs.kappa, dtype=float).reshape(-1)[idx]
        if np.any(~np.isfinite(kap)) or np.any(kap <= 0):
            raise InvalidArgumentError("kappa undefined at a summed step")
        tm1 = t[idx] - 1.0
        conc[idx] = (2.0 / beta) / kap * np.sqrt(2.0 * lt / tm1)
        learn[idx] = inputs.f_of(tm1) / tm1 / kap
        return conc, learn

    kappa = np.asarray(inputs.kappa, dtype=float)
    N = np.asarray(inputs.visit_counts, dtype=float)
    te = np.asarray(inputs.t_e, dtype=int)
    for s in range(kappa.shape[1]):
        if te[s] == 0 or te[s] > T:
            continue
        idx = np.arange(te[s] - 1, T)
        kap = kappa[idx, s]
        if np.any(~np.isfinite(kap)) or np.any(kap <= 0):
            raise InvalidArgumentError(f"kappa undefined at a summed step of state {s}")
        tm1 = t[idx] - 1.0
        n = N[idx, s]
        conc[idx] += (2.0 / beta) / kap * np.sqrt(2.0 * lt / tm1)
        learn[idx] += inputs.f_of(n) / np.sqrt(tm1 * n) / kap
    return conc, learn


def linfty_bound(inputs: BoundInputs, stateful: bool = False) -> float:
    conc, learn = linfty_bound_terms(inputs, stateful)
    return float(conc.sum() + learn.sum())


def empirical_policies(states, actions, num_states: int, num_actions: int):
    """Counts before each step: (N_{t-1}(s) as (T, S), p_t(a|s) as (T, S, A), NaN where unvisited)."""
    states = np.asarray(states, dtype=int)
    actions = np.asarray(actions, dtype=int)
    T = states.size
    onehot = np.zeros((T, num_states, num_actions))
    onehot[np.arange(T), states, actions] = 1.0
    before = np.concatenate([np.zeros((1, num_states, num_actions)), np.cumsum(onehot, axis=0)[:-1]])
    N = before.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = before / N[..., None]
    return N, p


def kappa_series(states, actions, truth, beta: float) -> np.ndarray:
    """kappa_t(s) = min_a min(p_t(a|s), p*(a|s)); NaN until every action of s has been seen."""
    Q = np.asarray(getattr(truth, "values", truth), dtype=float)
    Q = Q[None, :] if Q.ndim == 1 else Q
    S, A = Q.shape
    _, p = empirical_policies(states, actions, S, A)
    pstar = boltzmann_policy(Q, beta)
    unvisited = np.isnan(p).any(axis=2)
    kap = np.minimum(np.where(np.isnan(p), np.inf, p).min(axis=2), pstar.min(axis=1)[None, :])
    kap[unvisited | (kap <= 0)] = np.nan
    return kap


def martingale_deviation(states, actions, policies, num_states: int):
    """|p_t(a|s) - pbar_t(a|s)| for every step, with pbar_t the visit-averaged learner policy.

    Returns ``(dev, N)``: dev is (T, S, A) (NaN where s is unvisited before t),
    N is (T, S) visit counts before t.
    """
    states = np.asarray(states, dtype=int)
    actions = np.asarray(actions, dtype=int)
    pol = np.asarray(policies, dtype=float)
    T, _, A = pol.shape
    hits = np.zeros((T, num_states, A))
    hits[np.arange(T), states, actions] = 1.0
    plays = np.zeros((T, num_states, A))
    plays[np.arange(T), states] = pol[np.arange(T), states]
    zero = np.zeros((1, num_states, A))
    hits_before = np.concatenate([zero, np.cumsum(hits, axis=0)[:-1]])
    plays_before = np.concatenate([zero, np.cumsum(plays, axis=0)[:-1]])
    N = hits_before.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        dev = np.abs(hits_before - plays_before) / N[..., None]
    return dev, N


def covered(states, actions, policies, num_states: int, epsilon: float, radius_scale: float = 1.0) -> bool:
    """Did |p_t - pbar_t| stay below the concentration radius for all t in [2, T], s, a?"""
    dev, N = martingale_deviation(states, actions, policies, num_states)
    T, _, A = dev.shape
    if T < 2:
        return True
    lt = _log_term(A, num_states, T, epsilon)
    with np.errstate(invalid="ignore", divide="ignore"):
        rad = radius_scale * np.sqrt(2.0 * lt / N)
    ok = (dev[1:] < rad[1:, :, None]) | (N[1:, :, None] == 0)
    return bool(ok.all())


def azuma_coverage(scenario, num_seeds: int, radius_scale: float = 1.0, base_seed: int = 0) -> float:
    """Fraction of seeds whose whole run stays inside the concentration radius."""
    from .harness import simulate

    hits = 0
    for seed in range(base_seed, base_seed + num_seeds):
        sim = simulate(scenario, seed)
        hits += covered(sim.states, sim.actions, sim.policies, sim.num_states, scenario.epsilon, radius_scale)
    return hits / num_seeds


def adversarial_pair(action_count: int) -> tuple[RewardTable, RewardTable]:
    """Two rewards for which always playing action 0 is optimal: uniform 1/|A| and e_0."""
    if action_count < 2:
        raise InvalidArgumentError("adversarial_pair needs at least 2 actions")
    e0 = np.zeros(action_count)
    e0[0] = 1.0
    return RewardTable(np.full(action_count, 1.0 / action_count)), RewardTable(e0)


def impossibility_bound(action_count: int, T: int) -> float:
    """(T/2) * ||R1 - R2||_2 for the adversarial pair."""
    r1, r2 = adversarial_pair(action_count)
    return 0.5 * T * float(np.linalg.norm(r1.values - r2.values))


def certify_impossibility(trace: PredictionTrace) -> dict:
    """max over the adversarial pair of D_l2 against ``trace``, versus (T/2)||R1 - R2||_2.

    Every step is charged, including not-yet-explored fill values.
    """
    A = trace.values.shape[-1]
    T = len(trace)
    pair = adversarial_pair(A)
    ds = [norm_distances(r, trace, "l2", include_absent=True) for r in pair]
    bound = impossibility_bound(A, T)
    return {"measured": max(ds), "per_truth": ds, "bound": bound, "holds": max(ds) >= bound}


def kl_to_br_perstep_bound(delta: float, action_count: int, beta: float) -> float | None:
    """(1/beta) log((1 + m delta) / (1 - m delta)); None when m delta >= 1."""
    if delta < 0 or beta <= 0:
        raise InvalidArgumentError("delta must be >= 0 and beta > 0")
    md = action_count * delta
    if md >= 1.0:
        return None
    return math.log((1.0 + md) / (1.0 - md)) / beta


def perstep_from_final_sum(f: Callable, T: int) -> float:
    """sum_{t=1}^T f(t)/t: total per-step error when a final predictor is called on every prefix."""
    t = np.arange(1, T + 1, dtype=float)
    return float(np.sum(np.asarray(f(t), dtype=float) / t))


def log_factor_bound(f: Callable, T: int) -> float:
    """f(T) * (ln T + 1), which dominates f(T) * H_T."""
    return float(f(T)) * (math.log(T) + 1.0)


def polynomial_refinement_bound(alpha: float, T: int) -> float:
    """1 + (T^alpha - 1)/alpha, the integral bound on sum_{t<=T} t^(alpha-1)."""
    return 1.0 + (T ** alpha - 1.0) / alpha
