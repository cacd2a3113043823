"""Controlled spectral benchmark: augmented vs baseline SERA over folds x seeds, for several k.

    python scripts/run_benchmark.py [--ks 2 4 10] [--seeds 5]
"""

import argparse
import logging

import numpy as np

from smh.benchmark import make_benchmark
from smh.experiment import lowest_bin_mse, run_experiment
from smh.reconstruct import AugmentationConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ks", type=int, nargs="+", default=[2, 4, 10])
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--graphs", type=int, default=800)
    args = parser.parse_args()
    logging.basicConfig(level=logging.ERROR)
    ds = make_benchmark(args.graphs, seed=0)
    for k in args.ks:
        folds = []
        for seed in range(args.seeds):
            folds += run_experiment(ds, AugmentationConfig(master_seed=seed, k=k))["fold_results"]
        wins = sum(f["smh"]["sera"] <= f["baseline"]["sera"] for f in folds)
        gain = np.mean([lowest_bin_mse(f, "baseline") - lowest_bin_mse(f, "smh") for f in folds])
        print(f"k={k:>3}: SERA no worse in {wins}/{len(folds)} runs, mean lowest-bin MSE gain {gain:+.4f}")


if __name__ == "__main__":
    main()
