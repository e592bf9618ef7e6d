"""Davies-Bouldin score of preferred vs rejected outcome embeddings over training."""

import argparse

from prefk.analysis import ClusterAssignment, davies_bouldin
from prefk.train import Sizes, TrainConfig, gen_synthetic, train_run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--every", type=int, default=25)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    for seed in range(args.seeds):
        data = gen_synthetic("separable_clusters", Sizes(), seed)
        trace = train_run(TrainConfig(steps=args.steps, seed=seed, snapshot_every=args.every), data)
        scores = [
            f"{step}:{davies_bouldin(ClusterAssignment(snap['V'], data.outcome_groups)):.4f}"
            for step, snap in sorted(trace.snapshots.items())
        ]
        print(f"seed {seed}: " + "  ".join(scores))


if __name__ == "__main__":
    main()
