"""Acceptance criteria, one check per criterion.

Each ``criterion_*`` returns (passed, detail). Under pytest every criterion is
its own test and prints a PASS/FAIL line; ``python tests/test_acceptance.py``
runs them all and prints the same lines.
"""

import io
import json
import math
import sys
import tempfile
import time
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from prefk.analysis import ClusterAssignment, LayerFit, davies_bouldin, hill_alpha, weighted_alpha_from_fits
from prefk.certify import DIVERGENCE_NAMES, KERNEL_NAMES, TOLERANCE, certify
from prefk.cli import main
from prefk.divergences import (
    KL,
    Bhattacharyya,
    FDiv,
    Hellinger,
    JensenShannon,
    Renyi,
    Wasserstein1D,
    chi_squared,
    divergence,
    symmetric,
)
from prefk.kernels import RBF, MahalanobisScalar, Polynomial, Spectral
from prefk.loss import ObjectiveConfig
from prefk.mixture import HMK, FlatMixture
from prefk.selection import DivergenceSelectionMetrics, KernelSelectionMetrics, select_divergence, select_kernel
from prefk.train import GENERATORS, Sizes, TrainConfig, gen_synthetic, train_run


def criterion_1():
    start = time.perf_counter()
    rows = certify(100, seed=0)
    elapsed = time.perf_counter() - start
    worst = max(r["max_rel_err"] for r in rows)
    pairs = {(r["kernel"], r["divergence"]) for r in rows}
    ok = worst <= TOLERANCE and elapsed < 300 and len(pairs) == len(KERNEL_NAMES) * len(DIVERGENCE_NAMES)
    return ok, f"{len(rows)} cases over {len(pairs)} pairs, worst rel err {worst:.2e}, {elapsed:.0f}s"


def criterion_2():
    rng = np.random.default_rng(0)
    kinds = [KL(), JensenShannon(), Hellinger(), Renyi(2.0), Renyi(0.5), Bhattacharyya(), Wasserstein1D(), chi_squared()]
    kl_f = FDiv(lambda t: 0.0 if t == 0 else t * math.log(t))
    worst = {"identity": 0.0, "renyi_limit": 0.0, "f_kl": 0.0, "symmetry": 0.0}
    bad = []
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        p, q = (rng.dirichlet(np.ones(n)) + 1e-9 for _ in range(2))
        p, q = p / p.sum(), q / q.sum()
        for kind in kinds:
            d = divergence(kind, p, q)
            if d < 0:
                bad.append(f"{kind.name} negative")
            worst["identity"] = max(worst["identity"], abs(divergence(kind, p, p)))
            if symmetric(kind):
                worst["symmetry"] = max(worst["symmetry"], abs(d - divergence(kind, q, p)))
        if divergence(JensenShannon(), p, q) > math.log(2) + 1e-12:
            bad.append("JS above ln 2")
        if not 0 <= divergence(Hellinger(), p, q) <= 1 + 1e-12:
            bad.append("Hellinger out of [0, 1]")
        kl = divergence(KL(), p, q)
        worst["renyi_limit"] = max(worst["renyi_limit"], abs(divergence(Renyi(1.001), p, q) - kl))
        worst["f_kl"] = max(worst["f_kl"], abs(divergence(kl_f, p, q) - kl))
    w = np.array([0.5, 0.5]), np.array([0.25, 0.75])
    asym = all(not symmetric(k) and abs(divergence(k, *w) - divergence(k, *w[::-1])) > 1e-3 for k in (KL(), Renyi(2.0)))
    ok = (
        not bad
        and asym
        and worst["identity"] <= 1e-12
        and worst["symmetry"] <= 1e-12
        and worst["renyi_limit"] <= 1e-2
        and worst["f_kl"] <= 1e-10
    )
    return ok, "1000 pairs; " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + ("" if not bad else f"; {bad[0]}")


def criterion_3():
    cfg = TrainConfig(steps=200, entropy_weight=0.1, objective=ObjectiveConfig(kernel=HMK()), grad_clip=10.0)
    details, ok = [], True
    for kind in GENERATORS:
        trace = train_run(cfg, gen_synthetic(kind, Sizes(), cfg.seed))
        lam = min(min(r.lam) for r in trace.rows)
        tau = min(min(r.tau) for r in trace.rows)
        ok &= trace.failure is None and len(trace.rows) == 201 and lam >= 1e-3 and tau >= 1e-3
        details.append(f"{kind} min lam {lam:.1e} min tau {tau:.1e}")
    return ok, "; ".join(details)


COLLAPSE_MIXTURE = FlatMixture(
    polynomial=Polynomial(0.1, 2),
    rbf=RBF(2.0),
    spectral=Spectral((0.1,)),
    mahalanobis=MahalanobisScalar(0.0, 1.0, 1.3, 1.0),
)


def collapse_run(entropy_weight):
    cfg = TrainConfig(
        steps=500,
        seed=0,
        entropy_weight=entropy_weight,
        mixture_eta=0.5,
        objective=ObjectiveConfig(kernel=COLLAPSE_MIXTURE),
    )
    return train_run(cfg, gen_synthetic("local_structure", Sizes(), 0))


def criterion_4():
    plain, reg = collapse_run(0.0), collapse_run(0.1)
    top_plain, top_reg = max(plain.rows[-1].lam), max(reg.rows[-1].lam)
    ok = plain.failure is None and reg.failure is None and top_plain >= 0.9 and top_reg <= 0.7
    return ok, f"max lambda at step 500: {top_plain:.3f} without entropy, {top_reg:.3f} with weight 0.1"


def selection_table():
    k, d = KernelSelectionMetrics, DivergenceSelectionMetrics
    return [
        (select_kernel, k(pnd=1.4, pnav=0.6, tat=0.2, nag=-0.1), "rbf", "pnav_high_tat_low"),
        (select_kernel, k(pnd=1.02, pnav=0.1, tat=0.4, nag=0.01), "polynomial", "balanced"),
        (select_kernel, k(pnd=0.03, pnav=0.1, tat=0.4, nag=-0.02, pnd_form="difference"), "polynomial", "balanced"),
        (select_kernel, k(pnd=0.5, pnav=0.1, tat=0.4, nag=0.3), "mahalanobis", "nag_positive_pnav_low"),
        (select_kernel, k(pnd=0.05, pnav=0.4, tat=0.8, nag=-0.2), "spectral", "tat_high_pnd_low"),
        (select_kernel, k(pnd=2.0, pnav=0.4, tat=0.5, nag=-0.3), "rbf", "default"),
        (select_divergence, d(0.7, 0.5, 4.0, 0.0), "bhattacharyya", "overlap_high"),
        (select_divergence, d(0.2, 0.5, 4.0, 0.0), "wasserstein", "drift_high"),
        (select_divergence, d(0.2, 0.1, 4.0, 0.0), "renyi", "kurtosis_high"),
        (select_divergence, d(0.2, 0.1, 2.0, 0.0), "js", "overlap_low"),
        (select_divergence, d(0.5, 0.1, 2.0, 0.05), "hellinger", "smooth"),
        (select_divergence, d(0.5, 0.1, 2.0, 0.5), "kl", "default"),
    ]


def criterion_5():
    misses = []
    for rule, metrics, name, fired in selection_table():
        got = rule(metrics)
        if (got.name, got.rule_fired) != (name, fired):
            misses.append(f"{metrics} -> {got.name}, expected {name}")
    return not misses, f"{12 - len(misses)}/12 vectors matched" + ("" if not misses else f"; {misses[0]}")


def criterion_6():
    cfg = TrainConfig(steps=200, seed=0)
    data = gen_synthetic("separable_clusters", Sizes(), 0)
    trace = train_run(cfg, data)
    before = davies_bouldin(ClusterAssignment(data.policy.V, data.outcome_groups))
    after = davies_bouldin(ClusterAssignment(trace.final_params.policy.V, data.outcome_groups))
    return trace.failure is None and after < before, f"DBS {before:.4f} -> {after:.4f}"


def criterion_7():
    estimates = [hill_alpha(np.random.default_rng(s).pareto(2.0, 10_000) + 1.0, 1000) for s in range(20)]
    hits = sum(abs(a - 3.0) <= 0.3 for a in estimates)
    e_case = abs(weighted_alpha_from_fits([LayerFit(2.0, math.e)]) - 2.0)
    one_case = abs(weighted_alpha_from_fits([LayerFit(2.0, 1.0)]))
    ok = hits >= 18 and e_case <= 1e-12 and one_case <= 1e-12
    return ok, f"{hits}/20 Hill estimates within 0.3 of 3; hand cases off by {e_case:.0e}, {one_case:.0e}"


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        try:
            code = main(list(argv))
        except SystemExit as exc:
            code = exc.code
    return code, out.getvalue(), err.getvalue()


def criterion_8():
    checks = {}
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        code, first, _ = _cli("config", "--out", str(tmp / "c.json"))
        checks["round trip"] = code == 0 and json.loads(_cli("config", "--config", str(tmp / "c.json"))[1]) == json.loads(first)

        runs = [_cli("train", "--generator", "local_structure", "--steps", "25", "--seed", "3", "--out", str(tmp / n))[0] for n in "ab"]
        same = (tmp / "a" / "trace.csv").read_bytes() == (tmp / "b" / "trace.csv").read_bytes()
        checks["byte-identical trace"] = runs == [0, 0] and same

        good = tmp / "good.jsonl"
        good.write_text('{"x": [0, 0], "y_pos": [3, 0], "y_neg": [3.8, 0]}\n')
        twins = tmp / "twins.jsonl"
        twins.write_text('{"point": [0, 0], "label": 0}\n{"point": [0, 0], "label": 1}\n')
        bad_cfg = tmp / "bad.json"
        bad_cfg.write_text('{"objective": {"kernel": {"type": "laplace"}}}')
        codes = {
            "ok": _cli("select", "--data", str(good))[0] == 0,
            "analysis failure": _cli("analyze", "clusters", "--data", str(twins))[0] == 1,
            "config error": _cli("gradcheck", "--config", str(bad_cfg))[0] == 2,
            "bad trials": _cli("gradcheck", "--trials", "0")[0] == 2,
            "bad flag": _cli("train", "--generator", "spiral", "--out", str(tmp))[0] == 2,
        }
        checks["exit codes"] = all(codes.values())

        malformed = {
            "dim.jsonl": ('{"x": [0, 0], "y_pos": [1, 0], "y_neg": [0, 1]}\n{"x": [0], "y_pos": [1], "y_neg": [0]}\n', "line 2"),
            "json.jsonl": ('{"x": [0, 0], "y_pos": [1, 0], "y_neg": [0, 1]}\n\n{oops\n', "line 3"),
            "keys.jsonl": ('{"x": [0, 0], "y_pos": [1, 0]}\n', "line 1"),
        }
        diag = []
        for name, (text, where) in malformed.items():
            (tmp / name).write_text(text)
            code, _, err = _cli("select", "--data", str(tmp / name))
            diag.append(code == 2 and where in err)
        checks["malformed input"] = all(diag)
    failed = [k for k, v in checks.items() if not v]
    return not failed, "all CLI checks passed" if not failed else "failed: " + ", ".join(failed)


CRITERIA = {
    1: ("gradient certification", criterion_1),
    2: ("divergence axioms", criterion_2),
    3: ("HMK stability", criterion_3),
    4: ("collapse demonstration", criterion_4),
    5: ("selection-rule table", criterion_5),
    6: ("DBS training effect", criterion_6),
    7: ("spectral-exponent recovery", criterion_7),
    8: ("CLI contract", criterion_8),
}


def run_criterion(number):
    title, check = CRITERIA[number]
    ok, detail = check()
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number} ({title}): {detail}"
    return ok, line


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = run_criterion(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
