"""Smallest HMK weights seen during training, per generator and seed.

Compares plain ascent with the clipped-gradient variant, both with the
entropy bonus switched on.
"""

import argparse
from dataclasses import replace
from pathlib import Path

from prefk.config import load_config
from prefk.train import GENERATORS, gen_synthetic, train_run

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=HERE / "configs" / "hmk_stable.json")
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    cfg = load_config(args.config)
    print("generator           seed  clip   min_lambda  min_tau   failure")
    for kind in GENERATORS:
        for seed in range(args.seeds):
            data = gen_synthetic(kind, cfg.data.sizes, seed)
            for clip in (None, cfg.train.grad_clip):
                trace = train_run(replace(cfg.train, seed=seed, grad_clip=clip), data)
                lam = min(min(r.lam) for r in trace.rows)
                tau = min(min(r.tau) for r in trace.rows)
                print(f"{kind:<19} {seed:<5} {str(clip):<6} {lam:<11.2e} {tau:<9.2e} {trace.failure or ''}")


if __name__ == "__main__":
    main()
