"""Command line entry point: run, sweep, verify, oracle.

Exit codes: 0 ok, 1 a check or run failed, 2 invalid config or arguments.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import oracle as oracle_mod
from .errors import ConfigError, InvalidArgumentError
from .harness import load_config, output_root, run_experiment, sweep

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _report_config_error(exc: ConfigError) -> int:
    print("config error:", file=sys.stderr)
    for p in exc.problems:
        print(f"  {p}", file=sys.stderr)
    return EXIT_CONFIG


def _as_list(cfg):
    return cfg if isinstance(cfg, list) else [cfg]


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _report_config_error(exc)
    if isinstance(cfg, list):
        if len(cfg) != 1:
            print("config error:\n  <file>: run takes a single config; use sweep for a grid", file=sys.stderr)
            return EXIT_CONFIG
        cfg = cfg[0]
    seed = cfg.seeds[0] if args.seed is None else args.seed
    rec = run_experiment(cfg, seed)
    out = Path(args.out) if args.out else output_root(cfg.output_dir) / cfg.config_hash() / f"seed-{seed}"
    rec.write(out)
    print(json.dumps({"out": str(out), "measures": rec.summary["measures"], "regret": rec.summary["regret"],
                      "linf_bound": rec.summary["linf_bound"]}, indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        configs = _as_list(load_config(args.config))
    except ConfigError as exc:
        return _report_config_error(exc)
    seeds = None if args.seeds is None else list(range(args.seeds))
    records = sweep(configs, parallelism=args.jobs, seeds=seeds)
    root = output_root(args.out or configs[0].output_dir)
    failed = 0
    for rec in records:
        if rec.error:
            failed += 1
            print(f"{rec.config_hash} seed={rec.seed} error: {rec.error}")
            continue
        rec.write(root / rec.config_hash / f"seed-{rec.seed}")
    print(f"{len(records) - failed}/{len(records)} runs written under {root}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args) -> int:
    from .verify import verify
    start = time.perf_counter()
    try:
        out = Path(args.out) if args.out else output_root()
        records = verify(args.suite, args.epsilon, args.seeds, out / "verify_report.json")
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for r in records:
        print(r.line())
    bad = sum(not r.ok for r in records)
    print(f"{len(records) - bad}/{len(records)} checks ok in {time.perf_counter() - start:.1f}s; "
          f"report: {out / 'verify_report.json'}")
    return EXIT_FAIL if bad else EXIT_OK


def cmd_oracle(args) -> int:
    names = sorted(oracle_mod.ORACLES)
    if args.name == "list":
        for n in names:
            print(f"{n}: {oracle_mod.ORACLES[n].note}")
        return EXIT_OK
    targets = names if args.name == "all" else [args.name]
    bad = 0
    for n in targets:
        try:
            value, ok = oracle_mod.evaluate(n)
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_CONFIG
        expected = oracle_mod.ORACLES[n].expected
        tag = "ok" if ok else "MISMATCH"
        print(f"{n}: {value!r}" + ("" if expected is None else f"  (expected {expected!r}: {tag})"))
        bad += not ok
    return EXIT_FAIL if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prefwatch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one (config, seed) pair and write steps.csv + summary.json")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run every config in a grid over seeds 0..k-1")
    s.add_argument("--config", required=True)
    s.add_argument("--seeds", type=int)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run a named verification suite")
    v.add_argument("--suite", default="all")
    v.add_argument("--epsilon", type=float, default=0.1)
    v.add_argument("--seeds", type=int)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="recompute reference values ('all', 'list' or a name)")
    o.add_argument("name")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
