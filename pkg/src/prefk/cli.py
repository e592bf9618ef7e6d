"""Command-line front end.

Reports go to stdout as JSON; diagnostics go to stderr. Exit codes: 0 on
success, 1 when a check or analysis fails, 2 for bad input or config.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import certify
from .analysis import ClusterAssignment, davies_bouldin, weighted_alpha
from .config import RunConfig, config_to_dict, load_config
from .errors import ConfigError, DegenerateClusters, DegenerateTriplet, InvalidInput, KurtosisUndefined, PrefKError
from .mixture import collapse_detect
from .policy import PreferenceRecord, ToyPolicy
from .selection import (
    PND_FORMS,
    DivergenceSelectionMetrics,
    Thresholds,
    drift,
    kernel_metrics,
    kurtosis,
    mean_overlap,
    select_divergence,
    select_kernel,
    smoothness,
)
from .train import GENERATORS, SyntheticData, gen_synthetic, train_run

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

TRIPLET_KEYS = ("x", "y_pos", "y_neg")
OPTIONAL_GROUPS = (("logp_pos", "logp_neg"), ("policy_dist", "ref_dist"))


class InputError(Exception):
    """Malformed user input; maps to exit status 2."""


def _emit(doc) -> None:
    json.dump(doc, sys.stdout, indent=2, allow_nan=False)
    sys.stdout.write("\n")


def _warn(msg: str) -> None:
    print(f"prefk: {msg}", file=sys.stderr)


def _load_run_config(path) -> RunConfig:
    return RunConfig() if path is None else load_config(path)


def _seed(flag, config_seed: int) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("PREFK_SEED")
    if env is None:
        return config_seed
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"PREFK_SEED must be an integer, got {env!r}") from exc


# -- dataset ingestion ---------------------------------------------------------


def _vector(value, key: str, lineno: int) -> list[float]:
    if not isinstance(value, list) or not value or not all(isinstance(v, (int, float)) for v in value):
        raise InputError(f"line {lineno}: {key!r} must be a nonempty list of numbers")
    if not all(math.isfinite(v) for v in value):
        raise InputError(f"line {lineno}: {key!r} has non-finite entries")
    return [float(v) for v in value]


def read_triplets(path) -> list[dict]:
    """Parse and validate a JSONL triplet file; errors name the offending line."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    records, dim, layout = [], None, None
    allowed = set(TRIPLET_KEYS).union(*OPTIONAL_GROUPS)
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise InputError(f"line {lineno}: expected a JSON object")
        unknown = sorted(set(obj) - allowed)
        if unknown:
            raise InputError(f"line {lineno}: unknown key(s) {', '.join(unknown)}")
        missing = [k for k in TRIPLET_KEYS if k not in obj]
        if missing:
            raise InputError(f"line {lineno}: missing key(s) {', '.join(missing)}")
        rec = {k: _vector(obj[k], k, lineno) for k in TRIPLET_KEYS}
        if dim is None:
            dim = len(rec["x"])
        if any(len(rec[k]) != dim for k in TRIPLET_KEYS):
            raise InputError(f"line {lineno}: embedding dimensions differ from the file's dimension {dim}")
        present = []
        for group in OPTIONAL_GROUPS:
            have = [k in obj for k in group]
            if any(have) and not all(have):
                raise InputError(f"line {lineno}: {group[0]!r} and {group[1]!r} must appear together")
            present.append(all(have))
        if layout is None:
            layout = present
        elif present != layout:
            raise InputError(f"line {lineno}: optional fields differ from earlier lines")
        if present[0]:
            for k in OPTIONAL_GROUPS[0]:
                if not isinstance(obj[k], (int, float)) or not math.isfinite(obj[k]):
                    raise InputError(f"line {lineno}: {k!r} must be a finite number")
                rec[k] = float(obj[k])
        if present[1]:
            p, q = (_vector(obj[k], k, lineno) for k in OPTIONAL_GROUPS[1])
            if len(p) != len(q):
                raise InputError(f"line {lineno}: policy_dist and ref_dist lengths differ")
            rec["policy_dist"], rec["ref_dist"] = p, q
        rec["lineno"] = lineno
        records.append(rec)
    if not records:
        raise InputError(f"{path}: no triplets found")
    return records


def _triplets(records) -> list[tuple]:
    return [(r["x"], r["y_pos"], r["y_neg"]) for r in records]


def _load_thresholds(path) -> Thresholds:
    if path is None:
        return Thresholds()
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read thresholds {path}: {exc}") from exc
    if isinstance(doc, dict) and "thresholds" in doc:
        return load_config(path).thresholds
    if not isinstance(doc, dict):
        raise ConfigError("thresholds file must hold a JSON object")
    unknown = sorted(set(doc) - set(asdict(Thresholds())))
    if unknown:
        raise ConfigError(f"unknown threshold key(s): {', '.join(unknown)}")
    try:
        return Thresholds(**doc)
    except (PrefKError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


# -- commands ------------------------------------------------------------------


def cmd_gradcheck(args) -> int:
    cfg = _load_run_config(args.config)
    if args.trials < 1:
        raise InvalidInput("trials must be at least 1")
    seed = _seed(args.seed, cfg.train.seed)
    rows = certify.certify(args.trials, seed)
    rows.sort(key=lambda r: r["max_rel_err"], reverse=True)
    worst = rows[0]["max_rel_err"]
    passed = worst <= certify.TOLERANCE
    _emit(
        {
            "trials_per_pair": args.trials,
            "cases": len(rows),
            "seed": seed,
            "tolerance": certify.TOLERANCE,
            "max_rel_err": worst,
            "passed": passed,
            "worst": rows[: args.show],
        }
    )
    if not passed:
        _warn(f"gradient check failed: worst relative error {worst:.3e}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_select(args) -> int:
    thresholds = _load_thresholds(args.thresholds)
    records = read_triplets(args.data)
    triplets = _triplets(records)
    try:
        km = kernel_metrics(triplets, args.pnd_form)
    except DegenerateTriplet as exc:
        raise InputError(f"line {records[exc.index]['lineno']}: {exc}") from exc
    kernel = select_kernel(km, thresholds)
    report = {
        "n_triplets": len(records),
        "metrics": {"kernel": asdict(km)},
        "thresholds": asdict(thresholds),
        "recommended_kernel": kernel.name,
        "recommended_divergence": None,
        "rule_fired": {"kernel": kernel.rule_fired, "divergence": None},
    }
    if "policy_dist" not in records[0]:
        report["metrics"]["divergence"] = "insufficient data"
    else:
        if "logp_pos" in records[0]:
            samples = [r["logp_pos"] - r["logp_neg"] for r in records]
        else:
            # no log-probabilities: fall back to the embedding distance gap
            samples = [np.linalg.norm(np.subtract(x, yn)) - np.linalg.norm(np.subtract(x, yp)) for x, yp, yn in triplets]
        # each line is a (reference, policy) checkpoint pair for smoothness
        steps = [smoothness([r["ref_dist"], r["policy_dist"]]) for r in records]
        try:
            dm = DivergenceSelectionMetrics(
                support_overlap=mean_overlap(
                    [r["policy_dist"] for r in records], [r["ref_dist"] for r in records], thresholds.support_floor
                ),
                drift=drift(triplets),
                kurtosis=kurtosis(samples),
                smoothness=math.fsum(steps) / len(steps),
            )
        except KurtosisUndefined as exc:
            report["metrics"]["divergence"] = f"insufficient data: {exc}"
        else:
            div = select_divergence(dm, thresholds)
            report["metrics"]["divergence"] = asdict(dm)
            report["recommended_divergence"] = div.name
            report["rule_fired"]["divergence"] = div.rule_fired
    _emit(report)
    return EXIT_OK


def data_from_triplets(records) -> SyntheticData:
    """One context per triplet; its preferred and rejected outcomes get their own rows."""
    n = len(records)
    logits = np.zeros((n, 2 * n))
    U = np.array([r["x"] for r in records])
    V = np.empty((2 * n, U.shape[1]))
    pref = []
    for i, r in enumerate(records):
        V[2 * i], V[2 * i + 1] = r["y_pos"], r["y_neg"]
        if "logp_pos" in r:
            logits[i, 2 * i], logits[i, 2 * i + 1] = r["logp_pos"], r["logp_neg"]
        pref.append(PreferenceRecord(i, 2 * i, 2 * i + 1))
    groups = np.tile([1, 0], n)
    return SyntheticData(ToyPolicy(logits, U, V), pref, groups, "file")


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_trace(trace, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "lambda_1", "lambda_2", "lambda_3", "lambda_4", "tau_1", "tau_2", "entropy", "loss"])
        for row in trace.rows:
            lam = row.lam or (None,) * 4
            tau = row.tau or (None,) * 2
            w.writerow([row.step, *map(_fmt, lam), *map(_fmt, tau), _fmt(row.entropy), _fmt(row.loss)])


def cmd_train(args) -> int:
    cfg = _load_run_config(args.config)
    train_cfg = cfg.train
    train_cfg = replace(train_cfg, seed=_seed(args.seed, train_cfg.seed))
    if args.steps is not None:
        train_cfg = replace(train_cfg, steps=args.steps)
    if args.data is not None:
        data = data_from_triplets(read_triplets(args.data))
    else:
        generator = args.generator or cfg.data.generator
        data = gen_synthetic(generator, cfg.data.sizes, train_cfg.seed)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from exc

    trace = train_run(train_cfg, data)
    write_trace(trace, out / "trace.csv")
    (out / "snapshots.json").write_text(json.dumps({str(k): v for k, v in trace.snapshots.items()}) + "\n")

    collapse = None
    final = trace.rows[-1] if trace.rows else None
    if final is not None and final.lam is not None:
        report = collapse_detect(trace.lambdas())
        collapse = {"collapsed": report.collapsed, "dominant_index": report.dominant_index}
    summary = {
        "steps_completed": None if final is None else final.step,
        "initial_loss": trace.rows[0].loss if trace.rows else None,
        "final_loss": None if final is None else final.loss,
        "collapsed": bool(collapse and collapse["collapsed"]),
        "dominant_index": collapse and collapse["dominant_index"],
        "final_lambda": None if final is None or final.lam is None else list(final.lam),
        "final_tau": None if final is None or final.tau is None else list(final.tau),
        "failure": trace.failure,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    (out / "config.json").write_text(json.dumps(config_to_dict(replace(cfg, train=train_cfg)), indent=2) + "\n")
    _emit(summary)
    if trace.failure:
        _warn(f"training aborted: {trace.failure}")
        return EXIT_FAIL
    return EXIT_OK


def _read_json_file(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def read_labeled_points(path) -> ClusterAssignment:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    points, labels, dim = [], [], None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or set(obj) != {"point", "label"}:
            raise InputError(f"line {lineno}: expected an object with exactly 'point' and 'label'")
        point = _vector(obj["point"], "point", lineno)
        if dim is None:
            dim = len(point)
        if len(point) != dim:
            raise InputError(f"line {lineno}: point dimension differs from the file's dimension {dim}")
        if not isinstance(obj["label"], (int, str)) or isinstance(obj["label"], bool):
            raise InputError(f"line {lineno}: label must be an integer or string")
        points.append(point)
        labels.append(str(obj["label"]))
    if not points:
        raise InputError(f"{path}: no points found")
    return ClusterAssignment(np.array(points), np.array(labels))


def cmd_analyze(args) -> int:
    if args.kind == "clusters":
        assignment = read_labeled_points(args.data)
        try:
            dbs = davies_bouldin(assignment)
        except DegenerateClusters as exc:
            _warn(str(exc))
            return EXIT_FAIL
        _emit({"dbs": dbs, "k": assignment.k, "n_points": len(assignment.labels)})
        return EXIT_OK
    doc = _read_json_file(args.data)
    if not isinstance(doc, list) or not doc:
        raise InputError("htsr input must be a nonempty JSON list of matrices")
    k_rule = None if args.k is None else (lambda n: args.k)
    report = weighted_alpha(doc, k_rule) if k_rule else weighted_alpha(doc)
    _emit(report.to_dict())
    return EXIT_OK


def cmd_config(args) -> int:
    doc = config_to_dict(_load_run_config(args.config))
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    _emit(doc)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefk", description="Kernelized preference-optimization toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gradcheck", help="certify analytic gradients against finite differences")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, default=100, help="random cases per kernel x divergence pair")
    p.add_argument("--show", type=int, default=5, help="number of worst cases to list")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("select", help="recommend a kernel and divergence for a triplet dataset")
    p.add_argument("--data", required=True, help="JSONL triplet file")
    p.add_argument("--thresholds", help="JSON thresholds object or full run config")
    p.add_argument("--pnd-form", choices=PND_FORMS, default="ratio")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="run the training loop and write a trace")
    p.add_argument("--config")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--data", help="JSONL triplet file")
    source.add_argument("--generator", choices=GENERATORS)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="cluster separation or heavy-tail spectral report")
    p.add_argument("kind", choices=("clusters", "htsr"))
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, help="Hill tail size (default: max(2, 10%% of eigencount))")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("config", help="print the effective run config (defaults when no file is given)")
    p.add_argument("--config")
    p.add_argument("--out", help="also write it here")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        _warn(str(exc))
        return EXIT_INPUT
    except PrefKError as exc:
        _warn(f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
