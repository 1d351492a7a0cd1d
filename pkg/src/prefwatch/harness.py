"""Experiment orchestration: config ingestion, the learner/predictor loop, persistence and sweeps.

RNG: numpy PCG64 seeded from ``SeedSequence(entropy=[seed, hash_hi, hash_lo],
spawn_key=(role,))`` where the hash is the config hash and the roles are
env, action, noise and predictor. Each stream is consumed in a fixed order, so
a (config, seed) pair always reproduces the same run byte for byte.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import instances
from .bounds import BoundInputs, kappa_series, linfty_bound_terms
from .env import Mdp, bandit_mdp, finite_horizon_plan, mdp_from_dict, mdp_to_dict, solve_q_star
from .errors import ConfigError, InvalidArgumentError
from .learners import InteractionHistory, LearnerModel, make_learner, measured_policy_regret, \
    measured_regret_stateless, sample_row
from .measures import MEASURES, br_stateful_steps, br_stateless_steps, klbp_steps, norm_steps
from .predictors import PREDICTOR_KINDS, PredictionTrace, make_predictor

SCHEMA = "prefwatch-v1"
OUTPUT_ROOT_ENV = "PREFWATCH_OUTPUT_ROOT"
ROLES = {"env": 0, "action": 1, "noise": 2, "predictor": 3}
COLUMNS = (
    "t", "state", "action", "reward",
    "br_inc", "br_cum", "klbp_inc", "klbp_cum", "l2_inc", "l2_cum", "linf_inc", "linf_cum",
    "kappa", "bound_conc", "bound_learner", "bound_cum",
)
INT_COLUMNS = ("t", "state", "action")


@dataclass(frozen=True)
class EnvironmentSpec:
    kind: str
    reward: np.ndarray | None = None
    mdp: Mdp | None = None
    restart_on_terminal: bool = True

    @property
    def stateful(self) -> bool:
        return self.kind == "mdp"

    @property
    def num_states(self) -> int:
        return self.mdp.num_states if self.stateful else 1

    @property
    def num_actions(self) -> int:
        return self.mdp.num_actions if self.stateful else len(self.reward)

    def to_dict(self) -> dict:
        if self.stateful:
            return {"kind": "mdp", **mdp_to_dict(self.mdp), "restart_on_terminal": self.restart_on_terminal}
        return {"kind": "bandit", "reward": [float(x) for x in self.reward]}


@dataclass(frozen=True)
class PredictorSpec:
    kind: str
    beta: float | None = None
    sigma: float | None = None

    def to_dict(self) -> dict:
        out = {"predictor": self.kind}
        if self.beta is not None:
            out["beta"] = self.beta
        if self.sigma is not None:
            out["sigma"] = self.sigma
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    environment: EnvironmentSpec
    learner: LearnerModel
    predictor: PredictorSpec
    measures: tuple = MEASURES
    horizon: int = 1000
    seeds: tuple = (0,)
    epsilon: float = 0.1
    measure_beta: float | None = None
    output_dir: str | None = None
    name: str = ""

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "environment": self.environment.to_dict(),
            "learner": self.learner.to_dict(),
            "predictor": self.predictor.to_dict(),
            "measures": list(self.measures),
            "horizon": self.horizon,
            "seeds": list(self.seeds),
            "epsilon": self.epsilon,
        }
        if self.measure_beta is not None:
            out["measure_beta"] = self.measure_beta
        if self.output_dir is not None:
            out["output_dir"] = self.output_dir
        return out

    def config_hash(self) -> str:
        d = self.to_dict()
        for k in ("name", "seeds", "output_dir"):
            d.pop(k, None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def klbp_beta(self) -> float:
        for b in (self.measure_beta, self.learner.beta, self.predictor.beta):
            if b is not None:
                return b
        return 1.0

    def replace(self, **kw) -> "ExperimentConfig":
        from dataclasses import replace
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "ExperimentConfig":
        return parse_config(d, base_dir)


def _parse_environment(d, base_dir, problems) -> EnvironmentSpec | None:
    if not isinstance(d, dict):
        problems.append("environment: must be an object")
        return None
    kind = d.get("kind", "mdp" if "num_states" in d or "file" in d else "bandit")
    try:
        if kind == "bandit":
            if "reward" not in d:
                problems.append("environment.reward: required for a bandit")
                return None
            r = np.asarray(d["reward"], dtype=float)
            if r.ndim != 1 or r.size < 1 or not np.all(np.isfinite(r)):
                problems.append("environment.reward: must be a nonempty list of finite numbers")
                return None
            return EnvironmentSpec("bandit", r)
        if kind == "builtin":
            name = d.get("name")
            if name not in instances.MDPS:
                problems.append(f"environment.name: unknown builtin {name!r} (have {sorted(instances.MDPS)})")
                return None
            return EnvironmentSpec("mdp", mdp=instances.MDPS[name](),
                                   restart_on_terminal=bool(d.get("restart_on_terminal", True)))
        if kind == "mdp":
            if "file" in d:
                path = Path(d["file"])
                if not path.is_absolute() and base_dir is not None:
                    path = Path(base_dir) / path
                if not path.exists():
                    problems.append(f"environment.file: {path} does not exist")
                    return None
                with open(path) as fh:
                    mdp = mdp_from_dict(json.load(fh))
            else:
                mdp = mdp_from_dict(d)
            return EnvironmentSpec("mdp", mdp=mdp, restart_on_terminal=bool(d.get("restart_on_terminal", True)))
    except (InvalidArgumentError, ValueError, TypeError) as exc:
        problems.append(f"environment: {exc}")
        return None
    problems.append(f"environment.kind: unknown kind {kind!r} (bandit, mdp, builtin)")
    return None


def parse_config(d: dict, base_dir=None) -> ExperimentConfig:
    """Validate a config document; every problem is reported with its field path."""
    problems: list[str] = []
    if not isinstance(d, dict):
        raise ConfigError("<root>: config must be a JSON object")
    env = _parse_environment(d.get("environment"), base_dir, problems) if "environment" in d else None
    if "environment" not in d:
        problems.append("environment: required")

    learner = None
    ld = d.get("learner")
    if not isinstance(ld, dict):
        problems.append("learner: required object")
    else:
        try:
            learner = LearnerModel.from_dict(ld)
        except (InvalidArgumentError, KeyError, TypeError, ValueError) as exc:
            problems.append(f"learner: {exc}")
    if learner is not None and env is not None and learner.fixed_action is not None \
            and not 0 <= learner.fixed_action < env.num_actions:
        problems.append("learner.fixed_action: out of range")

    predictor = None
    pd = d.get("predictor", {"predictor": "best-response"})
    if isinstance(pd, str):
        pd = {"predictor": pd}
    if not isinstance(pd, dict):
        problems.append("predictor: must be a string or object")
    else:
        kind = pd.get("predictor", pd.get("kind"))
        beta = pd.get("beta")
        sigma = pd.get("sigma")
        if kind not in PREDICTOR_KINDS:
            problems.append(f"predictor.predictor: unknown kind {kind!r} (have {list(PREDICTOR_KINDS)})")
        elif kind == "averaging":
            if beta is None or not float(beta) > 0:
                problems.append("predictor.beta: averaging needs beta > 0")
            sigma = 0.0 if sigma is None else sigma
        if not problems or kind in PREDICTOR_KINDS:
            predictor = PredictorSpec(kind, None if beta is None else float(beta),
                                      None if sigma is None else float(sigma))

    measures = d.get("measures", list(MEASURES))
    if not isinstance(measures, list) or any(m not in MEASURES for m in measures):
        problems.append(f"measures: must be a list drawn from {list(MEASURES)}")
        measures = []
    measures = tuple(m for m in MEASURES if m in measures)

    horizon = d.get("horizon", 1000)
    if not isinstance(horizon, int) or horizon < 1:
        problems.append("horizon: must be an integer >= 1")

    seeds = d.get("seeds", [0])
    if isinstance(seeds, dict):
        count, base = seeds.get("count"), seeds.get("base", 0)
        if not isinstance(count, int) or count < 1 or not isinstance(base, int) or base < 0:
            problems.append("seeds: {count, base} needs count >= 1 and base >= 0")
            seeds = [0]
        else:
            seeds = list(range(base, base + count))
    elif isinstance(seeds, int):
        seeds = [seeds]
    if not isinstance(seeds, list) or not seeds or any(not isinstance(s, int) or s < 0 for s in seeds):
        problems.append("seeds: must be a nonempty list of nonnegative integers")
        seeds = [0]

    epsilon = d.get("epsilon", 0.1)
    if not isinstance(epsilon, (int, float)) or not 0 < epsilon < 1:
        problems.append("epsilon: must lie in (0, 1)")

    mb = d.get("measure_beta")
    if mb is not None and not (isinstance(mb, (int, float)) and mb >= 0):
        problems.append("measure_beta: must be >= 0")

    if env is not None and env.stateful and learner is not None and learner.kind == "boltzmann-synthesized":
        try:
            solve_q_star(env.mdp)
        except Exception as exc:  # divergent or malformed MDP
            problems.append(f"environment: Q* unavailable ({exc})")

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(env, learner, predictor, measures, horizon, tuple(seeds), float(epsilon),
                            None if mb is None else float(mb), d.get("output_dir"), d.get("name", ""))


def load_config(path) -> ExperimentConfig | list[ExperimentConfig]:
    """Load one config object, or a list of them (a sweep grid)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"<file>: {path} does not exist")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: invalid JSON ({exc})") from exc
    if isinstance(doc, list):
        out = []
        for i, d in enumerate(doc):
            try:
                out.append(parse_config(d, path.parent))
            except ConfigError as exc:
                raise ConfigError([f"[{i}].{p}" for p in exc.problems]) from exc
        return out
    return parse_config(doc, path.parent)


def rng_stream(config_hash: str, seed: int, role: str) -> np.random.Generator:
    h = int(config_hash, 16)
    ss = np.random.SeedSequence(entropy=[int(seed), h >> 32, h & 0xFFFFFFFF], spawn_key=(ROLES[role],))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class Simulation:
    config: ExperimentConfig
    seed: int
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    policies: np.ndarray
    trace: PredictionTrace
    truth: np.ndarray
    process: Mdp
    history: InteractionHistory

    @property
    def num_states(self) -> int:
        return self.truth.shape[0]

    @property
    def num_actions(self) -> int:
        return self.truth.shape[1]

    @property
    def stateful(self) -> bool:
        return self.config.environment.stateful


def ground_truth(env: EnvironmentSpec) -> tuple[np.ndarray, Mdp]:
    """(S, A) truth table the learner converges to (R* or Q*) and the interaction process."""
    if not env.stateful:
        return env.reward[None, :].copy(), bandit_mdp(env.reward)
    q = solve_q_star(env.mdp).values
    process = env.mdp.with_restarts() if env.restart_on_terminal else env.mdp
    return q, process


def simulate(config: ExperimentConfig, seed: int, learner_override=None) -> Simulation:
    """Play ``horizon`` steps. At step t the predictor commits to its prediction
    before the learner acts, and only ever sees (state, action) pairs."""
    env = config.environment
    T = config.horizon
    truth, process = ground_truth(env)
    S, A = truth.shape
    R = process.reward
    h = config.config_hash()
    env_u = rng_stream(h, seed, "env").random(T + 1)
    act_u = rng_stream(h, seed, "action").random(T)
    noise_rng = rng_stream(h, seed, "noise")

    opt = None
    if config.learner.kind == "epsilon-mixed-optimal" and env.stateful:
        opt = finite_horizon_plan(process, T)[2]
    learner = learner_override or make_learner(config.learner, truth, horizon=T, optimal_actions=opt)
    pspec = config.predictor
    predictor = make_predictor(pspec.kind, S, A, pspec.beta, 0.0 if pspec.sigma is None else pspec.sigma)
    adversarial = learner_override is None and config.learner.schedule is not None \
        and config.learner.schedule.noise_mode == "adversarial-sign"

    history = InteractionHistory(S, A)
    states = np.empty(T, dtype=np.int64)
    actions = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    policies = np.empty((T, S, A))
    vals = np.empty((T, S, A))
    pres = np.empty((T, S), dtype=bool)
    cum = np.cumsum(process.transition, axis=2)
    s = int(min(np.searchsorted(np.cumsum(process.initial_dist), env_u[T], side="right"), S - 1))
    for t in range(T):
        q, p = predictor.predict()
        vals[t] = q
        pres[t] = p
        pi = learner.policy(history, noise_rng, q.argmax(axis=1) if adversarial else None)
        policies[t] = pi
        a = sample_row(pi[s], act_u[t])
        r = R[s, a]
        states[t], actions[t], rewards[t] = s, a, r
        history.append(s, a, r)
        learner.update(s, a, r, pi[s])
        predictor.observe(s, a)
        if S > 1:
            s = int(min(np.searchsorted(cum[s, a], env_u[t], side="right"), S - 1))

    if env.stateful:
        trace = PredictionTrace(vals, pres, pspec.kind)
    else:
        trace = PredictionTrace(vals[:, 0, :], pres[:, 0], pspec.kind)
    return Simulation(config, seed, states, actions, rewards, policies, trace, truth, process, history)


@dataclass
class RunRecord:
    columns: dict
    summary: dict
    error: str | None = None

    @property
    def seed(self) -> int:
        return self.summary.get("seed")

    @property
    def config_hash(self) -> str:
        return self.summary.get("config_hash")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {SCHEMA}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        cols = [self.columns[c] for c in COLUMNS]
        for row in zip(*cols):
            w.writerow([str(int(v)) if c in INT_COLUMNS else _fmt(v) for c, v in zip(COLUMNS, row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, summary: dict | None = None) -> "RunRecord":
        lines = text.splitlines()
        if not lines or lines[0].strip() != f"# {SCHEMA}":
            raise InvalidArgumentError(f"steps.csv: missing '# {SCHEMA}' header")
        reader = csv.reader(lines[1:])
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise InvalidArgumentError("steps.csv: unexpected column layout")
        rows = list(reader)
        cols = {}
        for j, c in enumerate(COLUMNS):
            if c in INT_COLUMNS:
                cols[c] = np.array([int(r[j]) for r in rows], dtype=np.int64)
            else:
                cols[c] = np.array([float(r[j]) for r in rows], dtype=float)
        return cls(cols, summary or {})

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "steps.csv").write_text(self.to_csv())
        with open(out / "summary.json", "w") as fh:
            json.dump(_jsonable(self.summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return out

    @classmethod
    def read(cls, out_dir) -> "RunRecord":
        out = Path(out_dir)
        with open(out / "summary.json") as fh:
            summary = json.load(fh)
        return cls.from_csv((out / "steps.csv").read_text(), summary)


def _fmt(v) -> str:
    v = float(v)
    return "nan" if math.isnan(v) else format(v, ".17g")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    return x


def bounds_applicable(config: ExperimentConfig) -> bool:
    lm, pr = config.learner, config.predictor
    return (lm.kind == "boltzmann-synthesized" and pr.kind == "averaging" and lm.beta is not None
            and lm.beta > 0 and pr.beta == lm.beta and config.horizon >= 2)


def norm_truth(config: ExperimentConfig, truth: np.ndarray) -> np.ndarray:
    """Truth as compared by the norm measures: shifted to the predictor's sigma when it declares one."""
    sigma = config.predictor.sigma
    if sigma is None:
        return truth
    return truth - truth.mean(axis=1, keepdims=True) + sigma / truth.shape[1]


def evaluate(sim: Simulation) -> RunRecord:
    """Measure increments, kappa and bound terms for a finished simulation."""
    cfg = sim.config
    T = cfg.horizon
    S, A = sim.truth.shape
    nan = np.full(T, np.nan)
    cols = {"t": np.arange(1, T + 1), "state": sim.states, "action": sim.actions, "reward": sim.rewards}
    states = sim.states if sim.stateful else None
    finals = {}
    for m in MEASURES:
        if m not in cfg.measures:
            inc = nan
        elif m == "br":
            inc = br_stateful_steps(sim.process, sim.trace) if sim.stateful else br_stateless_steps(sim.truth, sim.trace)
        elif m == "klbp":
            inc = klbp_steps(sim.truth, sim.trace, cfg.klbp_beta, states=states)
        else:
            inc = norm_steps(norm_truth(cfg, sim.truth), sim.trace, m, states=states)
        cols[f"{m}_inc"] = inc
        cols[f"{m}_cum"] = np.cumsum(inc)
        if m in cfg.measures:
            finals[m] = float(cols[f"{m}_cum"][-1])

    kbeta = cfg.learner.beta
    if kbeta:
        kap = kappa_series(sim.states, sim.actions, sim.truth, kbeta)
        finite = np.where(np.isnan(kap), np.inf, kap).min(axis=1)
        cols["kappa"] = np.where(np.isfinite(finite), finite, np.nan)
    else:
        kap = None
        cols["kappa"] = nan

    h = sim.history
    t_e = h.exploration_times.tolist() if sim.stateful else h.exploration_time
    bound_total = None
    if bounds_applicable(cfg):
        N = np.vstack([np.zeros((1, S)), np.cumsum(np.eye(S)[sim.states], axis=0)[:-1]])
        inputs = BoundInputs(T, cfg.epsilon, cfg.learner.beta, A, S, kap, cfg.learner.schedule,
                             np.asarray(t_e) if sim.stateful else t_e, N)
        conc, learn = linfty_bound_terms(inputs, stateful=sim.stateful)
        cols["bound_conc"], cols["bound_learner"] = conc, learn
        cols["bound_cum"] = np.cumsum(conc + learn)
        bound_total = float(cols["bound_cum"][-1])
    else:
        cols["bound_conc"] = cols["bound_learner"] = cols["bound_cum"] = nan

    if sim.stateful:
        regret = measured_policy_regret(sim.policies, sim.process, T)
        regret_kind = "policy"
    else:
        regret = measured_regret_stateless(h, sim.truth[0])
        regret_kind = "realized"
    summary = {
        "schema": SCHEMA,
        "config_hash": cfg.config_hash(),
        "seed": sim.seed,
        "horizon": T,
        "num_states": S,
        "num_actions": A,
        "measures": finals,
        "regret": regret,
        "regret_kind": regret_kind,
        "t_e": t_e,
        "linf_bound": bound_total if bound_total is not None else "not-applicable",
        "linf_lhs": finals.get("linf"),
        "config": cfg.to_dict(),
    }
    return RunRecord(cols, summary)


def run_experiment(config: ExperimentConfig, seed: int) -> RunRecord:
    start = time.perf_counter()
    rec = evaluate(simulate(config, seed))
    rec.summary["wall_time"] = time.perf_counter() - start
    return rec


def _run_safe(args):
    config, seed = args
    try:
        return run_experiment(config, seed)
    except Exception as exc:  # isolate failures; the sweep reports them
        return RunRecord({}, {"config_hash": config.config_hash(), "seed": seed, "status": "error"},
                         error=f"{type(exc).__name__}: {exc}")


def sweep(configs, parallelism: int = 1, seeds=None) -> list[RunRecord]:
    """Run every (config, seed) pair; output sorted by (config hash, seed) whatever the scheduling."""
    if not configs:
        raise InvalidArgumentError("sweep: empty config grid")
    tasks = [(c, s) for c in configs for s in (c.seeds if seeds is None else seeds)]
    if parallelism <= 1:
        records = [_run_safe(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(_run_safe, tasks, chunksize=max(1, len(tasks) // (4 * parallelism))))
    return sorted(records, key=lambda r: (r.config_hash, r.seed))


def output_root(cli_value=None) -> Path:
    if cli_value:
        return Path(cli_value)
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
