"""Worst analytic-vs-numeric gradient error for every kernel x divergence pair."""

import argparse
from collections import defaultdict

from prefk.certify import DIVERGENCE_NAMES, KERNEL_NAMES, TOLERANCE, certify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    worst = defaultdict(float)
    for row in certify(args.trials, args.seed):
        key = (row["kernel"], row["divergence"])
        worst[key] = max(worst[key], row["max_rel_err"])
    print(f"{'':12}" + "".join(f"{d:>14}" for d in DIVERGENCE_NAMES))
    for k in KERNEL_NAMES:
        print(f"{k:12}" + "".join(f"{worst[k, d]:>14.2e}" for d in DIVERGENCE_NAMES))
    print(f"overall worst {max(worst.values()):.2e} (tolerance {TOLERANCE:g})")


if __name__ == "__main__":
    main()
