"""KL-Boltzmann distance of the averaging predictor as the horizon grows, bandit and MDP."""
import argparse

import numpy as np

from prefwatch.harness import run_experiment
from prefwatch.verify import BOLTZMANN, bandit_config, mdp_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--horizons", type=int, nargs="+", default=[250, 1000, 4000])
    ap.add_argument("--mdp", default="ladder4")
    args = ap.parse_args()
    pred = {"predictor": "averaging", "beta": 2.0}
    for label, build in (("bandit", lambda T: bandit_config(BOLTZMANN, pred, T, ("klbp",))),
                         (args.mdp, lambda T: mdp_config(args.mdp, BOLTZMANN, pred, T, ("klbp",)))):
        for T in args.horizons:
            vals = [run_experiment(build(T), s).summary["measures"]["klbp"] for s in range(args.seeds)]
            print(f"{label:<8} T={T:<6} mean D_KLBP={np.mean(vals):.4f}  per-step={np.mean(vals) / T:.2e}")


if __name__ == "__main__":
    main()
