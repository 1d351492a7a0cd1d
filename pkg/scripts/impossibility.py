"""Adversarial-pair certificate for each predictor against a constant learner, over a range of horizons."""
import argparse

from prefwatch.verify import check_impossibility


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizons", type=int, nargs="+", default=[10, 100, 1000])
    ap.add_argument("--actions", type=int, nargs="+", default=[2, 4])
    args = ap.parse_args()
    print(f"{'T':>6} {'check':<42} {'measured':>12} {'bound':>12} {'measured/T':>10}")
    for T in args.horizons:
        for rec in check_impossibility(horizon=T, action_counts=tuple(args.actions)):
            print(f"{T:>6} {rec.name:<42} {rec.measured:>12.4f} {rec.bound:>12.4f} "
                  f"{rec.detail['measured_over_T']:>10.4f}")


if __name__ == "__main__":
    main()
