"""Slack of D_BR against |S| + policy regret on the built-in MDPs, for every learner kind."""
import argparse

from prefwatch.verify import BANDIT_LEARNERS, check_br_stateful


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--horizon", type=int, default=2000)
    args = ap.parse_args()
    for kind, learner in BANDIT_LEARNERS.items():
        rec = check_br_stateful(seeds=args.seeds, horizon=args.horizon, learner=learner)
        by = ", ".join(f"{m}: {v['violations']} (max {v['max_slack']:.2f})" for m, v in rec.detail["by_mdp"].items())
        print(f"{kind:<24} {rec.status:<5} {by}")


if __name__ == "__main__":
    main()
