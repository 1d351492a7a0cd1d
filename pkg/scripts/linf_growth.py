"""Seed-averaged cumulative l-inf error of the averaging predictor at several horizons, with its log-log slope."""
import argparse
import json

from prefwatch.verify import check_linf_growth


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--marks", type=int, nargs="+", default=[100, 1000, 10_000])
    args = ap.parse_args()
    rec = check_linf_growth(seeds=args.seeds, marks=tuple(args.marks))
    print(json.dumps({"slope": rec.measured, **rec.detail}, indent=2))


if __name__ == "__main__":
    main()
