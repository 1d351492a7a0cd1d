"""Named verification suites: each check yields a record with a pass/fail/not-applicable status."""
from __future__ import annotations

import json
import math
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import instances, oracle
from .bounds import (BoundInputs, azuma_coverage, certify_impossibility, concentration_radius, impossibility_bound,
                     kl_to_br_perstep_bound, linfty_bound, log_factor_bound, perstep_from_final_sum,
                     polynomial_refinement_bound)
from .env import Mdp, boltzmann_policy, finite_horizon_optimal_return, policy_sequence_return, solve_q_star
from .errors import InvalidArgumentError
from .harness import ExperimentConfig, norm_truth, parse_config, run_experiment, simulate
from .learners import EstimateSchedule, InteractionHistory, measured_policy_regret, measured_regret_stateless
from .measures import d_br_stateful, d_br_stateless, kl_divergence, norm_distances, norm_steps, tv_distance
from .predictors import (PredictionTrace, averaging_predictor_stateless, reduce_final_to_perstep,
                         reduce_perstep_to_final, run_predictor, make_predictor)

PASS, FAIL, NA = "pass", "fail", "not-applicable"


@dataclass
class CheckRecord:
    name: str
    status: str
    measured: object = None
    bound: object = None
    seeds: int | None = None
    epsilon: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def line(self) -> str:
        return f"[{self.status.upper():>4}] {self.name}: measured={_short(self.measured)} bound={_short(self.bound)}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


BANDIT_LEARNERS = {
    "constant-action": {"kind": "constant-action", "fixed_action": 1},
    "explore-then-commit": {"kind": "explore-then-commit"},
    "exponential-weights": {"kind": "exponential-weights"},
    "boltzmann-synthesized": {"kind": "boltzmann-synthesized", "beta": 2.0, "c": 1.0, "alpha": 0.5},
    "epsilon-mixed-optimal": {"kind": "epsilon-mixed-optimal", "c": 1.0, "alpha": 0.5},
}
BOLTZMANN = {"kind": "boltzmann-synthesized", "beta": 2.0, "c": 1.0, "alpha": 0.5}
STATEFUL_BR_MDPS = ("chain3", "ladder4", "random5")


def bandit_config(learner: dict, predictor="best-response", horizon=1000, measures=("br",), epsilon=0.1,
                  reward=instances.BANDIT3) -> ExperimentConfig:
    return parse_config({"environment": {"kind": "bandit", "reward": list(reward)}, "learner": learner,
                         "predictor": predictor, "horizon": horizon, "measures": list(measures),
                         "epsilon": epsilon})


def mdp_config(name: str, learner: dict, predictor="best-response", horizon=2000, measures=("br",),
               epsilon=0.1) -> ExperimentConfig:
    return parse_config({"environment": {"kind": "builtin", "name": name}, "learner": learner,
                         "predictor": predictor, "horizon": horizon, "measures": list(measures),
                         "epsilon": epsilon})


# ------------------------------------------------------------------ regret


def check_br_stateless(seeds: int = 100, horizon: int = 1000) -> CheckRecord:
    """D_BR(best response) <= 1 + realized regret for every learner kind and seed, exactly."""
    worst, violations, runs = -math.inf, 0, 0
    per_kind = {}
    for kind, learner in BANDIT_LEARNERS.items():
        cfg = bandit_config(learner, horizon=horizon)
        kw = -math.inf
        for seed in range(seeds):
            sim = simulate(cfg, seed)
            slack = d_br_stateless(sim.truth, sim.trace) - (1.0 + measured_regret_stateless(sim.history, sim.truth))
            kw = max(kw, slack)
            violations += slack > 0
            runs += 1
        per_kind[kind] = kw
        worst = max(worst, kw)
    return CheckRecord("br-stateless", _status(violations == 0), worst, 0.0, seeds, None,
                       {"violations": int(violations), "runs": runs, "max_slack_by_learner": per_kind,
                        "slack": "D_BR - (1 + regret)"})


def check_br_stateful(seeds: int = 100, horizon: int = 2000,
                      learner: dict | None = None) -> CheckRecord:
    """D_BR(best response) <= |S| + policy regret on three proper MDPs, exactly.

    The default learner is epsilon-mixed-optimal, the only shipped learner with
    vanishing policy regret on MDPs.
    """
    learner = learner or {"kind": "epsilon-mixed-optimal", "c": 1.0, "alpha": 0.5}
    worst, violations, runs = -math.inf, 0, 0
    per_mdp = {}
    for name in STATEFUL_BR_MDPS:
        cfg = mdp_config(name, learner, horizon=horizon)
        S = cfg.environment.num_states
        mw, mv = -math.inf, 0
        for seed in range(seeds):
            sim = simulate(cfg, seed)
            br = d_br_stateful(sim.process, sim.trace, horizon)
            reg = measured_policy_regret(sim.policies, sim.process, horizon)
            slack = br - (S + reg)
            mw = max(mw, slack)
            mv += slack > 0
            runs += 1
        per_mdp[name] = {"max_slack": mw, "violations": int(mv)}
        worst = max(worst, mw)
        violations += mv
    return CheckRecord("br-stateful", _status(violations == 0), worst, 0.0, seeds, None,
                       {"violations": int(violations), "runs": runs, "by_mdp": per_mdp,
                        "learner": learner["kind"], "slack": "D_BR - (|S| + policy regret)"})


def check_regret_monotone(seeds: int = 100) -> CheckRecord:
    """Average per-step regret at 2T is at most that at T (seed-averaged), T in {250, 500, 1000}."""
    worst = -math.inf
    table = {}
    for kind, learner in BANDIT_LEARNERS.items():
        if kind == "constant-action":
            continue
        cfg = bandit_config(learner, horizon=2000)
        regs = np.zeros(4)
        marks = (250, 500, 1000, 2000)
        for seed in range(seeds):
            sim = simulate(cfg, seed)
            gaps = sim.truth[0].max() - sim.truth[0][sim.actions]
            cum = np.cumsum(gaps)
            regs += [cum[m - 1] / m for m in marks]
        regs /= seeds
        table[kind] = regs.tolist()
        worst = max(worst, float(np.max(regs[1:] - regs[:-1])))
    return CheckRecord("regret-average-decreasing", _status(worst <= 1e-9), worst, 1e-9, seeds, None,
                       {"avg_regret_at_250_500_1000_2000": table})


# ------------------------------------------------------------------- l-inf


def _linf_runs(cfg: ExperimentConfig, seeds: int):
    out = []
    for seed in range(seeds):
        rec = run_experiment(cfg, seed)
        out.append((rec.summary["linf_lhs"], rec.summary["linf_bound"]))
    return out


def check_linf_stateless(seeds: int = 200, horizon: int = 5000, epsilon: float = 0.1) -> CheckRecord:
    cfg = bandit_config(BOLTZMANN, predictor={"predictor": "averaging", "beta": 2.0}, horizon=horizon,
                        measures=("linf",), epsilon=epsilon)
    runs = _linf_runs(cfg, seeds)
    held = [lhs <= rhs for lhs, rhs in runs]
    frac = sum(held) / seeds
    ratio = max(lhs / rhs for lhs, rhs in runs)
    return CheckRecord("linf-bound-stateless", _status(frac >= 1 - epsilon), frac, 1 - epsilon, seeds, epsilon,
                       {"max_lhs_over_rhs": ratio, "horizon": horizon})


def check_linf_stateful(seeds: int = 200, horizon: int = 5000, epsilon: float = 0.1,
                        mdp: str = "ladder4") -> CheckRecord:
    cfg = mdp_config(mdp, BOLTZMANN, predictor={"predictor": "averaging", "beta": 2.0}, horizon=horizon,
                     measures=("linf",), epsilon=epsilon)
    runs = _linf_runs(cfg, seeds)
    frac = sum(lhs <= rhs for lhs, rhs in runs) / seeds
    ratio = max(lhs / rhs for lhs, rhs in runs)
    return CheckRecord("linf-bound-stateful", _status(frac >= 1 - epsilon), frac, 1 - epsilon, seeds, epsilon,
                       {"max_lhs_over_rhs": ratio, "horizon": horizon, "mdp": mdp})


def check_linf_growth(seeds: int = 50, marks=(100, 1000, 10_000), max_slope: float = 0.65) -> CheckRecord:
    """Log-log slope of the seed-averaged cumulative l-inf error across the horizons in ``marks``.

    One run of length max(marks) per seed; shorter horizons read its prefixes.
    """
    cfg = bandit_config(BOLTZMANN, predictor={"predictor": "averaging", "beta": 2.0}, horizon=max(marks),
                        measures=("linf",))
    cums = np.zeros(len(marks))
    for seed in range(seeds):
        sim = simulate(cfg, seed)
        cum = np.cumsum(norm_steps(norm_truth(cfg, sim.truth), sim.trace, "linf"))
        cums += [cum[m - 1] for m in marks]
    cums /= seeds
    slope = float(np.polyfit(np.log(marks), np.log(cums), 1)[0])
    return CheckRecord("linf-growth-slope", _status(slope <= max_slope), slope, max_slope, seeds, None,
                       {"mean_cumulative": dict(zip(map(str, marks), cums.tolist()))})


# ---------------------------------------------------------------- coverage


def check_coverage(seeds: int = 500, epsilon: float = 0.1, horizon: int = 1000) -> CheckRecord:
    cfg = bandit_config(BOLTZMANN, horizon=horizon, measures=(), epsilon=epsilon)
    frac = azuma_coverage(cfg, seeds)
    return CheckRecord("azuma-coverage", _status(frac >= 1 - epsilon), frac, 1 - epsilon, seeds, epsilon,
                       {"horizon": horizon, "actions": cfg.environment.num_actions})


def check_coverage_rescaled(seeds: int = 100, epsilon: float = 0.1) -> CheckRecord:
    cfg = bandit_config(BOLTZMANN, horizon=1000, measures=(), epsilon=epsilon)
    fr = [azuma_coverage(cfg, seeds, radius_scale=s) for s in (1.0, 0.5, 0.25)]
    return CheckRecord("coverage-shrinks-with-radius", _status(fr[0] >= fr[1] >= fr[2]), fr, None, seeds, epsilon)


# ------------------------------------------------------------ impossibility


def check_impossibility(horizon: int = 1000, action_counts=(2, 4)) -> list[CheckRecord]:
    out = []
    for A in action_counts:
        reward = [1.0 / A] * A
        for kind in ("best-response", "averaging", "constant-zero"):
            pred = {"predictor": kind, "beta": 1.0} if kind == "averaging" else kind
            cfg = bandit_config({"kind": "constant-action", "fixed_action": 0}, predictor=pred, horizon=horizon,
                                measures=(), reward=reward)
            sim = simulate(cfg, 0)
            cert = certify_impossibility(sim.trace)
            ratio = cert["measured"] / horizon
            ok = cert["holds"] and (A != 2 or ratio >= 0.3535)
            out.append(CheckRecord(f"impossibility-l2[{kind},A={A}]", _status(ok), cert["measured"], cert["bound"],
                                   1, None, {"measured_over_T": ratio, "per_truth": cert["per_truth"]}))
    return out


# -------------------------------------------------------------- properties


def _simplex(rng, n, A):
    x = rng.random((n, A)) + 1e-12
    return x / x.sum(axis=1, keepdims=True)


def check_properties(trials: int = 10_000, seed: int = 2024) -> list[CheckRecord]:
    rng = np.random.default_rng(seed)
    out = []

    bad = 0
    for _ in range(trials):
        A = int(rng.integers(2, 7))
        p, q = _simplex(rng, 2, A)
        k, d = kl_divergence(p, q), tv_distance(p, q)
        l2sq = float(((p - q) ** 2).sum())
        bad += not (k + 1e-12 >= 2 * d * d and 2 * d * d + 1e-12 >= 0.5 * l2sq)
    out.append(CheckRecord("pinsker-chain", _status(bad == 0), bad, 0, None, None, {"trials": trials}))

    worst = -math.inf
    for _ in range(trials):
        A = int(rng.integers(2, 7))
        beta = float(rng.uniform(0.0, 5.0))
        r, r2 = rng.uniform(-3, 3, (2, A))
        lhs = np.abs(boltzmann_policy(r, beta) - boltzmann_policy(r2, beta)).max()
        rhs = beta / 2 * np.abs(r - r2).max()
        worst = max(worst, lhs - rhs)
    out.append(CheckRecord("softmax-lipschitz", _status(worst <= 1e-12), worst, 0.0, None, None, {"trials": trials}))

    worst = 0.0
    for _ in range(trials):
        A = int(rng.integers(1, 7))
        beta = float(rng.uniform(0.0, 10.0))
        v = rng.uniform(-50, 50, A)
        c = float(rng.uniform(-1e3, 1e3))
        worst = max(worst, float(np.abs(boltzmann_policy(v + c, beta) - boltzmann_policy(v, beta)).max()))
    out.append(CheckRecord("boltzmann-translation-invariance", _status(worst <= 1e-12), worst, 1e-12, None, None,
                           {"trials": trials}))

    worst = 0.0
    for _ in range(trials):
        A = int(rng.integers(2, 7))
        counts = rng.integers(1, 1000, A).astype(float)
        beta = float(rng.uniform(0.1, 10.0))
        sigma = float(rng.uniform(-5, 5))
        pol = boltzmann_policy(averaging_predictor_stateless(counts, beta, sigma).values, beta)
        worst = max(worst, float(np.abs(pol - counts / counts.sum()).max()))
    out.append(CheckRecord("averaging-round-trip", _status(worst <= 1e-12), worst, 1e-12, None, None,
                           {"trials": trials}))
    return out


def check_kl_to_br(trials: int = 10_000, seed: int = 77) -> CheckRecord:
    """Per-step BR gap is bounded through KL whenever |A| * sqrt(KL/2) < 1."""
    rng = np.random.default_rng(seed)
    worst, used = -math.inf, 0
    for _ in range(trials):
        A = int(rng.integers(2, 5))
        beta = float(rng.uniform(0.5, 5.0))
        truth = rng.uniform(0, 1, A)
        pred = truth + rng.normal(0, 0.05, A)
        kl = kl_divergence(boltzmann_policy(pred, beta), boltzmann_policy(truth, beta))
        b = kl_to_br_perstep_bound(math.sqrt(kl / 2), A, beta)
        if b is None:
            continue
        used += 1
        gap = truth.max() - truth[int(np.argmax(pred))]
        worst = max(worst, gap - b)
    return CheckRecord("kl-to-br-perstep", _status(worst <= 1e-12), worst, 0.0, None, None,
                       {"trials_in_domain": used})


# -------------------------------------------------------------- reductions


def check_reductions(trials: int = 1000, seed: int = 99) -> list[CheckRecord]:
    rng = np.random.default_rng(seed)
    out = []
    worst = -math.inf
    for _ in range(trials):
        A, T = int(rng.integers(2, 6)), int(rng.integers(1, 30))
        truth = rng.uniform(-1, 1, A)
        trace = PredictionTrace(rng.uniform(-2, 2, (T, A)), np.ones(T, bool))
        final = reduce_perstep_to_final(trace, "average")
        worst = max(worst, T * float(np.linalg.norm(final.values - truth)) - norm_distances(truth, trace, "l2"))
    out.append(CheckRecord("reduction-average-jensen", _status(worst <= 1e-9), worst, 0.0, None, None,
                           {"trials": trials}))

    worst = -math.inf
    for _ in range(trials):
        A, T = int(rng.integers(2, 6)), int(rng.integers(1, 30))
        truth = rng.uniform(0, 1, A)
        trace = PredictionTrace(rng.uniform(0, 1, (T, A)), np.ones(T, bool))
        final = reduce_perstep_to_final(trace, "br-majority")
        final_br = T * float(truth.max() - truth[int(np.argmax(final.values))])
        worst = max(worst, final_br - A * d_br_stateless(truth, trace))
    out.append(CheckRecord("reduction-br-majority", _status(worst <= 1e-9), worst, 0.0, None, None,
                           {"trials": trials}))

    worst = -math.inf
    for _ in range(200):
        A = int(rng.integers(2, 5))
        truth = rng.uniform(0, 1, A)
        noise = np.random.default_rng(int(rng.integers(1 << 30)))

        def final_predictor(prefix: InteractionHistory, truth=truth, noise=noise, A=A):
            n = len(prefix) + 1
            return truth + math.sqrt(n) / n * noise.random() * noise.choice([-1.0, 1.0], A)

        hist = InteractionHistory.from_actions(rng.integers(0, A, 60), A)
        trace = reduce_final_to_perstep(final_predictor, hist)
        err = np.abs(trace.values - truth).max(axis=1)
        t = np.arange(1, len(hist) + 1)
        worst = max(worst, float((err - np.sqrt(t) / t).max()))
    out.append(CheckRecord("reduction-final-prefix-error", _status(worst <= 1e-12), worst, 0.0))

    T = 10_000
    lhs = perstep_from_final_sum(np.sqrt, T)
    out.append(CheckRecord("reduction-log-factor", _status(lhs <= log_factor_bound(np.sqrt, T)), lhs,
                           log_factor_bound(np.sqrt, T)))
    alpha = 0.5
    lhs = perstep_from_final_sum(lambda t: np.power(t, alpha), T)
    rhs = polynomial_refinement_bound(alpha, T)
    out.append(CheckRecord("reduction-polynomial-refinement", _status(lhs <= rhs), lhs, rhs))
    return out


# ------------------------------------------------------------------ oracle


def _mdp_from_lists(P, R, mu0) -> Mdp:
    S, A = len(P), len(P[0])
    return Mdp(S, A, P, mu0, frozenset(), R)


def check_oracle_values() -> list[CheckRecord]:
    out = []
    for name, o in oracle.ORACLES.items():
        value, ok = oracle.evaluate(name)
        out.append(CheckRecord(f"oracle[{name}]", _status(ok), value, o.expected))
    return out


def check_package_against_oracle() -> list[CheckRecord]:
    """Vectorized implementation versus the independent reference on the shared examples."""
    pairs = {
        "boltzmann-1-0": (boltzmann_policy([1.0, 0.0], 1.0).tolist(), oracle.softmax([1.0, 0.0], 1.0)),
        "averaging-2-1-1": (averaging_predictor_stateless([2, 1, 1], 1.0, 0.0).values.tolist(),
                            oracle.averaging_closed_form([2, 1, 1], 1.0, 0.0)),
        "kl-example": ([kl_divergence(boltzmann_policy([0, 1], 1), boltzmann_policy([1, 0], 1))],
                       [oracle.kl(oracle.softmax([0, 1], 1), oracle.softmax([1, 0], 1))]),
        "concentration-radius": ([concentration_radius(101, 2, 1, 101, 0.1)], [oracle.radius(101, 2, 1, 101, 0.1)]),
        "kl-to-br-bound": ([kl_to_br_perstep_bound(0.1, 2, 1.0)], [math.log(1.2 / 0.8)]),
        "impossibility-bound": ([impossibility_bound(2, 10)], [5 * oracle._pair_norm(2)]),
    }
    out = []
    for name, (a, b) in pairs.items():
        err = max(abs(x - y) for x, y in zip(a, b))
        out.append(CheckRecord(f"package-vs-oracle[{name}]", _status(err <= 1e-12), err, 1e-12))

    T, kappa = 10_000, 0.2
    inputs = BoundInputs(T, 0.1, 2.0, 3, 1, np.full(T, kappa), lambda n: np.sqrt(n), 2)
    got, ref = linfty_bound(inputs), oracle.linfty_rhs_constant_kappa(T, 2.0, kappa, 3, 0.1, 2)
    rel = abs(got - ref) / ref
    out.append(CheckRecord("package-vs-oracle[linfty-rhs-partial-sum]", _status(rel <= 1e-6), rel, 1e-6))
    return out


def check_mdp_enumeration(instances_per_shape: int = 2, seed: int = 31) -> list[CheckRecord]:
    """Propagation-based returns and D_BR versus trajectory enumeration, all |S|,|A| <= 3, horizon <= 4."""
    rng = random.Random(seed)
    worst = {"optimal-return": 0.0, "policy-return": 0.0, "d-br-stateful": 0.0, "policy-enumeration": 0.0}
    count = 0
    for S in (1, 2, 3):
        for A in (1, 2, 3):
            for H in (1, 2, 3, 4):
                for k in range(instances_per_shape):
                    P, R, mu0 = oracle.random_mdp(rng, S, A, terminal=(k % 2 == 1))
                    mdp = _mdp_from_lists(P, R, mu0)
                    ref_opt = oracle.expectimax_return(P, R, mu0, H)
                    worst["optimal-return"] = max(worst["optimal-return"],
                                                  abs(finite_horizon_optimal_return(mdp, H) - ref_opt))
                    if A ** (S * H) <= 4096:
                        worst["policy-enumeration"] = max(
                            worst["policy-enumeration"],
                            abs(finite_horizon_optimal_return(mdp, H) - oracle.enumerated_optimal_return(P, R, mu0, H)))
                    pols = oracle.random_policies(rng, H, S, A)
                    worst["policy-return"] = max(worst["policy-return"],
                                                 abs(policy_sequence_return(mdp, pols)
                                                     - oracle.policy_sequence_return(P, R, mu0, pols)))
                    tables = [[[rng.random() for _ in range(A)] for _ in range(S)] for _ in range(H)]
                    trace = PredictionTrace(np.array(tables), np.ones((H, S), bool))
                    worst["d-br-stateful"] = max(worst["d-br-stateful"],
                                                 abs(d_br_stateful(mdp, trace) - oracle.d_br_stateful(P, R, mu0, tables)))
                    count += 1
    return [CheckRecord(f"enumeration[{k}]", _status(v <= 1e-9), v, 1e-9, None, None, {"instances": count})
            for k, v in worst.items()]


def check_q_star_oracle() -> list[CheckRecord]:
    out = []
    for name, build in instances.MDPS.items():
        mdp = build()
        ref = oracle.q_star_backward(mdp.transition.tolist(), mdp.reward.tolist(), set(mdp.terminals), sweeps=2000)
        err = float(np.abs(solve_q_star(mdp).values - np.array(ref)).max())
        out.append(CheckRecord(f"q-star-vs-sweeps[{name}]", _status(err <= 1e-8), err, 1e-8))
    return out


# ------------------------------------------------------------------ suites


def _deterministic(epsilon, seeds):
    out = check_reductions() + check_impossibility()
    out.append(check_kl_to_br())
    out += check_package_against_oracle()
    return out


SUITES = {
    "deterministic": _deterministic,
    "regret": lambda eps, seeds: [check_br_stateless(seeds or 100), check_br_stateful(seeds or 100),
                                  check_regret_monotone(seeds or 100)],
    "linf": lambda eps, seeds: [check_linf_stateless(seeds or 200, epsilon=eps),
                                check_linf_stateful(seeds or 200, epsilon=eps), check_linf_growth()],
    "coverage": lambda eps, seeds: [check_coverage(seeds or 500, eps), check_coverage_rescaled(epsilon=eps)],
    "impossibility": lambda eps, seeds: check_impossibility(),
    "properties": lambda eps, seeds: check_properties() + [check_kl_to_br()],
    "reductions": lambda eps, seeds: check_reductions(),
    "oracle": lambda eps, seeds: (check_oracle_values() + check_package_against_oracle()
                                  + check_mdp_enumeration() + check_q_star_oracle()),
}
ORDER = ("deterministic", "properties", "reductions", "impossibility", "oracle", "coverage", "regret", "linf")


def run_suite(name: str, epsilon: float = 0.1, seeds: int | None = None) -> list[CheckRecord]:
    if name == "all":
        out = []
        for n in ORDER:
            if n != "deterministic":
                out += SUITES[n](epsilon, seeds)
        return out
    if name not in SUITES:
        raise InvalidArgumentError(f"unknown suite {name!r}; available: {', '.join(ORDER + ('all',))}")
    if not 0 < epsilon < 1:
        raise InvalidArgumentError("epsilon must lie in (0, 1)")
    return SUITES[name](epsilon, seeds)


def write_report(records: list[CheckRecord], path, suite: str, elapsed: float) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    from .harness import _jsonable
    doc = {"suite": suite, "wall_time": elapsed, "passed": all(r.ok for r in records),
           "checks": [_jsonable(asdict(r)) for r in records]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def verify(suite: str, epsilon: float = 0.1, seeds: int | None = None, report_path=None):
    start = time.perf_counter()
    records = run_suite(suite, epsilon, seeds)
    if report_path is not None:
        write_report(records, report_path, suite, time.perf_counter() - start)
    return records
