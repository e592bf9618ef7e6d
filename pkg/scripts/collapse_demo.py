"""Flat-mixture collapse with and without the entropy bonus.

Runs the pinned mixture on local_structure for each entropy weight and writes
one trace CSV per weight, plus a printed summary of the final weights.
"""

import argparse
from dataclasses import replace
from pathlib import Path

from prefk.cli import write_trace
from prefk.config import load_config
from prefk.mixture import collapse_detect
from prefk.train import gen_synthetic, train_run

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=HERE / "configs" / "collapse_mixture.json")
    ap.add_argument("--weights", type=float, nargs="+", default=[0.0, 0.01, 0.05, 0.1, 0.2])
    ap.add_argument("--out", default="runs/collapse")
    args = ap.parse_args()

    cfg = load_config(args.config)
    data = gen_synthetic(cfg.data.generator, cfg.data.sizes, cfg.train.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print("weight  max_lambda  min_lambda  collapsed  final_lambda")
    for w in args.weights:
        trace = train_run(replace(cfg.train, entropy_weight=w), data)
        write_trace(trace, out / f"trace_w{w:g}.csv")
        lam = trace.rows[-1].lam
        report = collapse_detect(trace.lambdas())
        status = "failed: " + trace.failure if trace.failure else str(report.collapsed)
        print(f"{w:<7g} {max(lam):<11.3f} {min(lam):<11.2e} {status:<10} {tuple(round(v, 3) for v in lam)}")


if __name__ == "__main__":
    main()
