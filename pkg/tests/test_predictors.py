import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prefwatch import oracle
from prefwatch.env import QTable, RewardTable, boltzmann_policy
from prefwatch.errors import InvalidArgumentError, NotYetExploredError
from prefwatch.learners import InteractionHistory
from prefwatch.predictors import (Averaging, PredictionTrace, averaging_predictor_stateful,
                                  averaging_predictor_stateless, best_response_predictor, make_predictor,
                                  reduce_final_to_perstep, reduce_perstep_to_final, run_predictor)

counts_st = st.lists(st.integers(1, 500), min_size=2, max_size=6)


class TestBestResponse:
    def test_indicator_on_previous_action(self):
        h = InteractionHistory.from_actions([0, 3, 2], 4)
        assert best_response_predictor(h).values.tolist() == [0, 0, 1, 0]

    def test_first_step_is_action_zero(self):
        assert best_response_predictor(InteractionHistory(1, 4)).values.tolist() == [1, 0, 0, 0]

    @given(st.lists(st.integers(0, 4), min_size=1, max_size=30))
    def test_argmax_is_last_action(self, acts):
        h = InteractionHistory.from_actions(acts, 5)
        assert int(np.argmax(best_response_predictor(h).values)) == acts[-1]

    def test_stateful_rows(self):
        h = InteractionHistory(3, 2)
        h.append(1, 1)
        h.append(0, 0)
        h.append(1, 0)
        q = best_response_predictor(h)
        assert isinstance(q, QTable) and q.values.tolist() == [[1, 0], [1, 0], [1, 0]]
        h.append(2, 1)
        assert best_response_predictor(h).values[2].tolist() == [0, 1]


class TestAveraging:
    def test_uniform_counts(self):
        r = averaging_predictor_stateless([3, 3, 3, 3], 1.7, 2.0)
        assert np.allclose(r.values, 0.5, atol=1e-15)

    def test_closed_form_example(self):
        r = averaging_predictor_stateless([2, 1, 1], 1.0, 0.0)
        assert np.allclose(r.values, oracle.averaging_closed_form([2, 1, 1], 1.0, 0.0), atol=1e-15)
        assert np.round(r.values, 4).tolist() == [0.4621, -0.2310, -0.2310]

    @given(counts_st, st.floats(0.05, 20), st.floats(-10, 10))
    def test_round_trip_and_normalization(self, counts, beta, sigma):
        c = np.array(counts, float)
        r = averaging_predictor_stateless(c, beta, sigma)
        assert abs(r.values.sum() - sigma) <= 1e-9
        assert np.abs(boltzmann_policy(r.values, beta) - c / c.sum()).max() <= 1e-12

    @given(counts_st, st.floats(0.05, 20), st.floats(-10, 10), st.floats(-10, 10))
    def test_sigma_shift_is_additive(self, counts, beta, s1, s2):
        a = averaging_predictor_stateless(counts, beta, s1).values
        b = averaging_predictor_stateless(counts, beta, s2).values
        assert np.abs((a - b) - (s1 - s2) / len(counts)).max() <= 1e-9

    def test_zero_count_raises(self):
        with pytest.raises(NotYetExploredError):
            averaging_predictor_stateless([2, 0, 1], 1.0)

    def test_beta_positive(self):
        with pytest.raises(InvalidArgumentError):
            averaging_predictor_stateless([1, 1], 0.0)

    def test_stateful_rows_and_absence(self):
        counts = np.array([[2, 1, 1], [4, 4, 4], [0, 3, 1]])
        q = averaging_predictor_stateful(counts, 1.0, [0.0, 1.5, 3.0])
        assert np.allclose(q.values[0], averaging_predictor_stateless([2, 1, 1], 1.0).values, atol=1e-15)
        assert np.allclose(q.values[1], 0.5) and np.allclose(q.values[2], 1.0)
        assert q.present.tolist() == [True, True, False]

    @given(st.lists(counts_st.filter(lambda c: len(c) == 3), min_size=1, max_size=4), st.floats(0.1, 5))
    def test_stateful_round_trip(self, rows, beta):
        c = np.array(rows, float)
        q = averaging_predictor_stateful(c, beta)
        assert np.abs(boltzmann_policy(q.values, beta) - c / c.sum(axis=1, keepdims=True)).max() <= 1e-12

    def test_online_matches_pure_function(self, rng):
        S, A, beta = 3, 3, 1.3
        pred = Averaging(S, A, beta, sigma=[0.0, 1.0, -1.0])
        counts = np.zeros((S, A))
        for _ in range(200):
            s, a = int(rng.integers(S)), int(rng.integers(A))
            pred.observe(s, a)
            counts[s, a] += 1
            q, present = pred.predict()
            ref = averaging_predictor_stateful(counts, beta, [0.0, 1.0, -1.0])
            assert np.array_equal(present, ref.present)
            assert np.abs(q - ref.values).max() <= 1e-12


class TestCausality:
    @given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=2, max_size=40), st.data())
    def test_future_perturbation_leaves_past_unchanged(self, steps, data):
        t = data.draw(st.integers(0, len(steps) - 1))
        alt = list(steps)
        alt[t] = ((steps[t][0] + 1) % 3, (steps[t][1] + 1) % 3)
        for kind in ("best-response", "averaging", "constant-zero"):
            a = run_predictor(make_predictor(kind, 3, 3, 1.0), *zip(*steps))
            b = run_predictor(make_predictor(kind, 3, 3, 1.0), *zip(*alt))
            # prediction at step k (0-based) uses steps < k, so indices <= t are untouched
            assert np.array_equal(a.values[: t + 1], b.values[: t + 1])

    def test_hundred_random_perturbations(self, rng):
        for _ in range(100):
            T = int(rng.integers(2, 50))
            st_, ac = rng.integers(0, 2, T), rng.integers(0, 3, T)
            t = int(rng.integers(T))
            ac2 = ac.copy()
            ac2[t] = (ac2[t] + 1) % 3
            a = run_predictor(make_predictor("averaging", 2, 3, 2.0), st_, ac)
            b = run_predictor(make_predictor("averaging", 2, 3, 2.0), st_, ac2)
            assert np.array_equal(a.values[: t + 1], b.values[: t + 1])


class TestReductions:
    def test_constant_trace_all_modes(self, rng):
        r = np.array([0.2, 0.9, 0.1])
        trace = PredictionTrace(np.tile(r, (6, 1)), np.ones(6, bool))
        assert np.allclose(reduce_perstep_to_final(trace, "average").values, r)
        assert np.array_equal(reduce_perstep_to_final(trace, "sample", rng).values, r)
        assert reduce_perstep_to_final(trace, "br-majority").values.tolist() == [0, 1, 0]

    def test_majority_vote(self):
        trace = PredictionTrace(np.array([[1.0, 0.0], [0.9, 0.1], [0.2, 0.8]]), np.ones(3, bool))
        assert int(np.argmax(reduce_perstep_to_final(trace, "br-majority").values)) == oracle._majority() == 0

    def test_majority_ties_lowest_index(self):
        trace = PredictionTrace(np.array([[0.0, 1.0], [1.0, 0.0]]), np.ones(2, bool))
        assert reduce_perstep_to_final(trace, "br-majority").values.tolist() == [1, 0]

    def test_sample_is_uniform_over_steps(self):
        vals = np.arange(4, dtype=float)[:, None] * np.ones((4, 2))
        trace = PredictionTrace(vals, np.ones(4, bool))
        g = np.random.default_rng(0)
        picks = [reduce_perstep_to_final(trace, "sample", g).values[0] for _ in range(4000)]
        assert np.abs(np.bincount(np.array(picks, int), minlength=4) / 4000 - 0.25).max() < 0.03

    def test_errors(self):
        with pytest.raises(InvalidArgumentError):
            reduce_perstep_to_final(PredictionTrace(np.zeros((0, 2)), np.zeros(0, bool)), "average")
        with pytest.raises(InvalidArgumentError):
            reduce_perstep_to_final(PredictionTrace(np.zeros((2, 2)), np.ones(2, bool)), "median")

    def test_final_to_perstep_constant(self):
        h = InteractionHistory.from_actions([0, 1, 2, 1], 3)
        trace = reduce_final_to_perstep(lambda prefix: RewardTable([1.0, 2.0, 3.0]), h)
        assert np.array_equal(trace.values, np.tile([1.0, 2.0, 3.0], (4, 1)))

    def test_final_to_perstep_uses_strict_prefix(self):
        h = InteractionHistory.from_actions([2, 0, 1], 3)
        trace = reduce_final_to_perstep(lambda prefix: np.full(3, float(len(prefix))), h)
        assert trace.values[:, 0].tolist() == [0.0, 1.0, 2.0]
