import json

import numpy as np
import pytest

from prefwatch import cli, harness
from prefwatch.errors import ConfigError
from prefwatch.harness import (RunRecord, load_config, output_root, parse_config, run_experiment, simulate,
                               sweep)
from prefwatch.learners import Learner
from prefwatch.verify import bandit_config, mdp_config

BANDIT = {
    "environment": {"kind": "bandit", "reward": [1.0, 0.5, 0.0]},
    "learner": {"kind": "boltzmann-synthesized", "beta": 2.0, "c": 1.0, "alpha": 0.5},
    "predictor": {"predictor": "averaging", "beta": 2.0},
    "horizon": 200,
}


def cfg(**over):
    d = json.loads(json.dumps(BANDIT))
    d.update(over)
    return parse_config(d)


class TestConfig:
    def test_every_problem_has_a_field_path(self):
        with pytest.raises(ConfigError) as exc:
            parse_config({"environment": {"kind": "bandit"}, "learner": {"kind": "nope"},
                          "horizon": 0, "epsilon": 2, "measures": ["l3"]})
        text = "\n".join(exc.value.problems)
        for path in ("environment.reward", "learner:", "horizon:", "epsilon:", "measures:"):
            assert path in text

    def test_unknown_predictor(self):
        with pytest.raises(ConfigError, match="predictor.predictor"):
            parse_config({**BANDIT, "predictor": "oracle"})

    def test_averaging_needs_beta(self):
        with pytest.raises(ConfigError, match="predictor.beta"):
            parse_config({**BANDIT, "predictor": "averaging"})

    def test_fixed_action_range(self):
        with pytest.raises(ConfigError, match="learner.fixed_action"):
            parse_config({**BANDIT, "learner": {"kind": "constant-action", "fixed_action": 5}})

    def test_seed_forms(self):
        assert cfg(seeds=3).seeds == (3,)
        assert cfg(seeds={"count": 3, "base": 5}).seeds == (5, 6, 7)
        with pytest.raises(ConfigError, match="seeds"):
            cfg(seeds=[-1])

    def test_hash_ignores_name_and_seeds(self):
        assert cfg(name="a", seeds=[1]).config_hash() == cfg(name="b", seeds=[2, 3]).config_hash()
        assert cfg(horizon=201).config_hash() != cfg().config_hash()

    def test_round_trip_through_dict(self):
        c = cfg()
        assert parse_config(c.to_dict()).config_hash() == c.config_hash()

    def test_grid_errors_are_indexed(self, tmp_path):
        p = tmp_path / "grid.json"
        p.write_text(json.dumps([BANDIT, {**BANDIT, "horizon": -1}]))
        with pytest.raises(ConfigError, match=r"\[1\]\.horizon"):
            load_config(p)

    def test_mdp_file_relative_to_config(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps({
            "num_states": 2, "num_actions": 1, "transition": [[[0.0, 1.0]], [[0.0, 1.0]]],
            "reward": [[0.5], [0.0]], "initial_dist": [1.0, 0.0], "terminal_states": [1]}))
        (tmp_path / "c.json").write_text(json.dumps({
            "environment": {"kind": "mdp", "file": "m.json"}, "learner": {"kind": "explore-then-commit"},
            "horizon": 10}))
        c = load_config(tmp_path / "c.json")
        assert c.environment.num_states == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="environment.file"):
            parse_config({"environment": {"kind": "mdp", "file": "absent.json"},
                          "learner": {"kind": "explore-then-commit"}}, tmp_path)


class TestRun:
    def test_byte_identical_reruns(self):
        c = cfg()
        assert run_experiment(c, 4).to_csv() == run_experiment(c, 4).to_csv()
        assert run_experiment(c, 4).to_csv() != run_experiment(c, 5).to_csv()

    def test_stateful_reruns(self):
        c = mdp_config("chain3", {"kind": "boltzmann-synthesized", "beta": 2.0, "c": 1.0, "alpha": 0.5,
                                  "noise_mode": "random-direction"}, horizon=300)
        assert run_experiment(c, 1).to_csv() == run_experiment(c, 1).to_csv()

    def test_single_step(self):
        rec = run_experiment(cfg(horizon=1), 0)
        assert rec.to_csv().count("\n") == 3
        assert rec.summary["linf_bound"] == "not-applicable"

    def test_constant_optimal_learner_best_response(self):
        c = bandit_config({"kind": "constant-action", "fixed_action": 0}, horizon=500)
        assert run_experiment(c, 0).summary["measures"]["br"] <= 1

    def test_cumulative_columns_are_prefix_sums(self):
        rec = run_experiment(cfg(horizon=400), 2)
        for m in ("br", "klbp", "l2", "linf"):
            assert np.abs(np.cumsum(rec.columns[f"{m}_inc"]) - rec.columns[f"{m}_cum"]).max() <= 1e-9
        assert np.abs(np.cumsum(rec.columns["bound_conc"] + rec.columns["bound_learner"])
                      - rec.columns["bound_cum"]).max() <= 1e-9

    def test_unselected_measures_are_nan(self):
        rec = run_experiment(cfg(measures=["br"]), 0)
        assert np.isnan(rec.columns["klbp_cum"]).all() and set(rec.summary["measures"]) == {"br"}

    def test_csv_and_summary_round_trip(self, tmp_path):
        rec = run_experiment(cfg(), 3)
        back = RunRecord.read(rec.write(tmp_path / "r"))
        for k, v in rec.columns.items():
            assert np.array_equal(np.asarray(v), back.columns[k], equal_nan=True)
        assert back.to_csv() == rec.to_csv()
        assert back.summary["config_hash"] == rec.config_hash and back.summary["seed"] == 3

    def test_policies_are_distributions(self):
        sim = simulate(mdp_config("ladder4", {"kind": "exponential-weights"}, horizon=200), 0)
        assert np.allclose(sim.policies.sum(axis=2), 1.0)


class _Decoy(Learner):
    """Plays a fixed action sequence regardless of what it is told."""

    def __init__(self, actions, A):
        super().__init__(1, A)
        self.seq, self.t = list(actions), 0

    def policy(self, history, rng, target=None):
        pi = np.zeros((1, self.A))
        pi[0, self.seq[self.t]] = 1.0
        return pi

    def update(self, state, action, reward, probs):
        self.t += 1


def test_predictor_sees_only_actions():
    c = cfg(horizon=300, predictor={"predictor": "averaging", "beta": 2.0})
    real = simulate(c, 7)
    decoy = simulate(c, 7, learner_override=_Decoy(real.actions, 3))
    assert np.array_equal(real.actions, decoy.actions)
    assert not np.allclose(real.policies, decoy.policies)
    assert np.array_equal(real.trace.values, decoy.trace.values)


class TestSweep:
    def test_single_matches_run(self):
        c = cfg(seeds=[2])
        [rec] = sweep([c])
        assert rec.to_csv() == run_experiment(c, 2).to_csv()

    def test_grid_count_and_order(self):
        configs = [cfg(horizon=20 + i, seeds={"count": 50, "base": 0}) for i in range(4)]
        recs = sweep(configs)
        keys = [(r.config_hash, r.seed) for r in recs]
        assert len(recs) == 200 and keys == sorted(keys) and len(set(keys)) == 200

    def test_parallelism_does_not_change_output(self):
        configs = [cfg(horizon=50, seeds=[0, 1, 2]), cfg(horizon=60, seeds=[0, 1, 2])]
        a = [r.to_csv() for r in sweep(configs, 1)]
        b = [r.to_csv() for r in sweep(configs, 2)]
        assert a == b

    def test_failure_is_isolated(self, monkeypatch):
        real = harness.run_experiment

        def flaky(config, seed):
            if seed == 1:
                raise RuntimeError("boom")
            return real(config, seed)

        monkeypatch.setattr(harness, "run_experiment", flaky)
        recs = sweep([cfg(horizon=20, seeds=[0, 1, 2])])
        assert [r.error is None for r in recs] == [True, False, True]
        assert "boom" in recs[1].error


class TestCli:
    def write(self, tmp_path, doc):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(doc))
        return str(p)

    def test_run_ok(self, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["run", "--config", self.write(tmp_path, cfg().to_dict()), "--out", str(out)]) == 0
        assert (out / "steps.csv").read_text().startswith("# prefwatch-v1\n")
        summary = json.loads((out / "summary.json").read_text())
        assert {"measures", "regret", "t_e", "linf_bound", "config_hash", "seed", "wall_time"} <= set(summary)

    def test_config_error_exit_code(self, tmp_path, capsys):
        assert cli.main(["run", "--config", self.write(tmp_path, {"horizon": 0})]) == 2
        assert "horizon" in capsys.readouterr().err

    def test_sweep_failure_exit_code(self, tmp_path, monkeypatch):
        monkeypatch.setattr(harness, "run_experiment", lambda c, s: (_ for _ in ()).throw(RuntimeError("x")))
        doc = cfg(horizon=10).to_dict()
        assert cli.main(["sweep", "--config", self.write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 1

    def test_unknown_suite(self, tmp_path):
        assert cli.main(["verify", "--suite", "nope", "--out", str(tmp_path)]) == 2

    def test_oracle_list_and_unknown(self):
        assert cli.main(["oracle", "list"]) == 0
        assert cli.main(["oracle", "no-such-value"]) == 2

    def test_output_root_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PREFWATCH_OUTPUT_ROOT", str(tmp_path / "env-root"))
        assert output_root() == tmp_path / "env-root"
        assert output_root("explicit") == harness.Path("explicit")
        monkeypatch.chdir(tmp_path)
        doc = cfg(horizon=10, seeds=[0]).to_dict()
        assert cli.main(["sweep", "--config", self.write(tmp_path, doc)]) == 0
        assert list((tmp_path / "env-root").glob("*/seed-0/steps.csv"))
