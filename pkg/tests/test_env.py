import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prefwatch import oracle
from prefwatch.env import (Mdp, QTable, RewardTable, bandit_mdp, boltzmann_policy, finite_horizon_optimal_return,
                           finite_horizon_plan, load_mdp, mdp_from_dict, mdp_to_dict, policy_sequence_return,
                           sample_transition, solve_q_star)
from prefwatch.errors import DivergentMdpError, InvalidArgumentError
from prefwatch.instances import MDPS

from conftest import finite, small_mdp_lists


def chain_mdp(r0, r1):
    P = np.zeros((3, 2, 3))
    P[0, :, 1] = 1
    P[1, :, 2] = 1
    P[2, :, 2] = 1
    return Mdp(3, 2, P, [1, 0, 0], {2}, [r0, r1, [0, 0]])


class TestBoltzmann:
    def test_equal_values_uniform(self):
        assert np.allclose(boltzmann_policy([2.5, 2.5, 2.5], 3.7), 1 / 3, atol=1e-15)

    def test_zero_beta_uniform(self):
        assert np.allclose(boltzmann_policy([5.0, -1.0, 0.3, 9.0], 0.0), 0.25, atol=1e-15)

    def test_matches_reference_softmax(self):
        got = boltzmann_policy([1.0, 0.0], 1.0)
        assert np.allclose(got, oracle.softmax([1.0, 0.0], 1.0), atol=1e-15)
        assert np.round(got, 4).tolist() == [0.7311, 0.2689]

    def test_no_overflow_at_large_scale(self):
        p = boltzmann_policy([1e4, 0.0, -1e4], 1.0)
        assert np.all(np.isfinite(p)) and p[0] == 1.0

    @pytest.mark.parametrize("bad", [[np.nan, 0.0], [np.inf, 1.0]])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(InvalidArgumentError):
            boltzmann_policy(bad, 1.0)

    def test_negative_beta_rejected(self):
        with pytest.raises(InvalidArgumentError):
            boltzmann_policy([0.0, 1.0], -0.1)

    @given(st.lists(finite, min_size=1, max_size=8), st.floats(0, 50))
    def test_sums_to_one(self, v, beta):
        assert abs(boltzmann_policy(v, beta).sum() - 1.0) <= 1e-12

    @given(st.lists(finite, min_size=1, max_size=8), st.floats(0, 10), st.floats(-1e3, 1e3))
    def test_translation_invariance(self, v, beta, c):
        a = boltzmann_policy(np.array(v) + c, beta)
        b = boltzmann_policy(v, beta)
        assert np.abs(a - b).max() <= 1e-12

    def test_sums_to_one_bulk(self, rng):
        v = rng.uniform(-100, 100, (10_000, 5))
        beta = rng.uniform(0, 20, (10_000, 1))
        p = boltzmann_policy(v * beta, 1.0)
        assert np.abs(p.sum(axis=1) - 1).max() <= 1e-12


class TestTables:
    def test_reward_sigma_checked(self):
        RewardTable([1.0, -1.0], sigma=0.0)
        with pytest.raises(InvalidArgumentError):
            RewardTable([1.0, 0.0], sigma=0.0)

    def test_reward_normalized(self):
        r = RewardTable([1.0, 0.5, 0.0]).normalized(3.0)
        assert abs(r.values.sum() - 3.0) <= 1e-12
        assert np.allclose(np.diff(r.values), [-0.5, -0.5])

    def test_values_immutable(self):
        r = RewardTable([1.0, 2.0])
        with pytest.raises(ValueError):
            r.values[0] = 5

    def test_qtable_rowwise_sigma(self):
        q = QTable([[1.0, 2.0], [0.0, 0.0]]).normalized([1.0, -2.0])
        assert np.allclose(q.values.sum(axis=1), [1.0, -2.0], atol=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            QTable([[0.0, np.nan]])


class TestMdp:
    def test_rows_must_be_stochastic(self):
        with pytest.raises(InvalidArgumentError):
            Mdp(1, 1, [[[0.9]]], [1.0])

    def test_terminal_must_self_loop_with_zero_reward(self):
        P = np.zeros((2, 1, 2))
        P[:, 0, 1] = 1
        with pytest.raises(InvalidArgumentError):
            Mdp(2, 1, P, [1, 0], {1}, [[0.0], [1.0]])
        Mdp(2, 1, P, [1, 0], {1}, [[0.0], [0.0]])

    def test_renormalized_once(self):
        m = Mdp(1, 2, [[[1 + 5e-10], [1 - 5e-10]]], [1.0])
        assert np.all(m.transition.sum(axis=2) == 1.0)

    def test_json_round_trip(self, tmp_path):
        m = MDPS["ladder4"]()
        path = tmp_path / "m.json"
        path.write_text(json.dumps(mdp_to_dict(m)))
        back = load_mdp(path)
        assert np.array_equal(back.transition, m.transition) and back.terminals == m.terminals

    def test_missing_keys(self):
        with pytest.raises(InvalidArgumentError, match="transition"):
            mdp_from_dict({"num_states": 1, "num_actions": 1, "initial_dist": [1]})

    def test_restarts_leave_terminal(self):
        m = MDPS["chain3"]().with_restarts()
        assert np.allclose(m.transition[2, 0], m.initial_dist) and not m.terminals


class TestQStar:
    def test_terminal_base_case(self):
        P = np.zeros((2, 2, 2))
        P[:, :, 1] = 1
        m = Mdp(2, 2, P, [1, 0], {1}, [[0.3, 0.8], [0, 0]])
        assert np.allclose(solve_q_star(m).values[0], [0.3, 0.8], atol=1e-12)

    def test_two_step_chain(self):
        q = solve_q_star(chain_mdp([0.3, 0.7], [0.2, 0.9])).values
        assert np.allclose(q[0], oracle.ORACLES["q-star-two-step-chain"].compute(), atol=1e-12)

    def test_self_loop_diverges(self):
        m = Mdp(1, 1, [[[1.0]]], [1.0], frozenset(), [[1.0]])
        with pytest.raises(DivergentMdpError):
            solve_q_star(m)

    def test_zero_reward_loop_without_terminal_is_fixed_point(self):
        m = Mdp(1, 1, [[[1.0]]], [1.0], frozenset(), [[0.0]])
        assert solve_q_star(m).values[0, 0] == 0.0

    def test_finite_horizon_slice(self):
        m = Mdp(1, 1, [[[1.0]]], [1.0], frozenset(), [[1.0]])
        assert solve_q_star(m, horizon=5).values[0, 0] == 5.0

    @pytest.mark.parametrize("name", sorted(MDPS))
    def test_bellman_residual(self, name):
        m = MDPS[name]()
        tol = 1e-10
        q = solve_q_star(m, tol=tol).values
        resid = m.reward + m.transition @ q.max(axis=1) - q
        resid[list(m.terminals)] = 0
        assert np.abs(resid).max() <= tol

    @pytest.mark.parametrize("name", sorted(MDPS))
    def test_matches_reference_sweeps(self, name):
        m = MDPS[name]()
        ref = oracle.q_star_backward(m.transition.tolist(), m.reward.tolist(), set(m.terminals), sweeps=3000)
        assert np.abs(solve_q_star(m).values - np.array(ref)).max() <= 1e-8


class TestFiniteHorizon:
    def test_single_state_one_step(self):
        assert finite_horizon_optimal_return(bandit_mdp([1.0, 0.0]), 1) == 1.0

    def test_single_state_repeated(self):
        assert finite_horizon_optimal_return(bandit_mdp([1.0, 0.0]), 37) == 37.0

    def test_two_state_horizon3_enumeration(self):
        P = [[[0.7, 0.3], [0.1, 0.9]], [[0.5, 0.5], [1.0, 0.0]]]
        R = [[0.2, 0.6], [1.0, 0.0]]
        m = Mdp(2, 2, P, [1, 0], frozenset(), R)
        assert abs(finite_horizon_optimal_return(m, 3) - oracle.enumerated_optimal_return(P, R, [1, 0], 3)) <= 1e-12

    @given(small_mdp_lists(), st.integers(1, 4))
    def test_equals_policy_enumeration(self, mdp, H):
        P, R, mu = mdp
        S, A = len(P), len(P[0])
        m = Mdp(S, A, P, mu, frozenset(), R)
        got = finite_horizon_optimal_return(m, H)
        assert abs(got - oracle.expectimax_return(P, R, mu, H)) <= 1e-9
        if A ** (S * H) <= 729:
            assert abs(got - oracle.enumerated_optimal_return(P, R, mu, H)) <= 1e-9

    @given(small_mdp_lists(), st.integers(1, 4), st.randoms(use_true_random=False))
    def test_policy_return_equals_trajectory_sum(self, mdp, H, r):
        P, R, mu = mdp
        S, A = len(P), len(P[0])
        pols = oracle.random_policies(r, H, S, A)
        m = Mdp(S, A, P, mu, frozenset(), R)
        assert abs(policy_sequence_return(m, pols) - oracle.policy_sequence_return(P, R, mu, pols)) <= 1e-9

    def test_plan_shapes(self):
        V, Q, acts = finite_horizon_plan(MDPS["ladder4"](), 6)
        assert V.shape == (7, 4) and Q.shape == (6, 4, 3) and acts.shape == (6, 4)
        assert np.all(V[-1] == 0)


class TestSampleTransition:
    def test_point_mass(self, rng):
        P = np.zeros((3, 1, 3))
        P[0, 0, 1] = 1
        P[1:, 0, 2] = 1
        m = Mdp(3, 1, P, [1, 0, 0], {2})
        assert all(sample_transition(m, 0, 0, rng) == 1 for _ in range(100))

    def test_terminal_absorbs(self, rng):
        m = MDPS["chain3"]()
        assert all(sample_transition(m, 2, a, rng) == 2 for a in (0, 1) for _ in range(20))

    def test_fair_split_frequency(self):
        m = Mdp(2, 1, [[[0.5, 0.5]], [[0.5, 0.5]]], [1, 0])
        g = np.random.default_rng(2)
        freq = np.mean([sample_transition(m, 0, 0, g) for _ in range(100_000)])
        assert abs(freq - 0.5) <= 0.01

    def test_reproducible(self):
        m = MDPS["random5"]()
        g1, g2 = np.random.default_rng(9), np.random.default_rng(9)
        assert [sample_transition(m, s % 4, 1, g1) for s in range(50)] == \
               [sample_transition(m, s % 4, 1, g2) for s in range(50)]
