import json
import subprocess
import sys

import numpy as np
import pytest

from prefk.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


def rbf_profile_rows():
    # collinear and far from x: |d+ - d-| = 0.8 (PNAV 0.64) while TAT = 0.8 / 6.8
    return [
        {"x": [0.0, 0.0], "y_pos": [3.0, 0.0], "y_neg": [3.8, 0.0]},
        {"x": [0.0, 0.0], "y_pos": [0.0, 3.8], "y_neg": [0.0, 3.0]},
    ]


def test_config_command_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "config", "--out", str(tmp_path / "c.json"))
    assert code == EXIT_OK
    code, again, _ = run(capsys, "config", "--config", str(tmp_path / "c.json"))
    assert code == EXIT_OK and json.loads(again) == json.loads(out)


def test_gradcheck_small_run_passes(capsys):
    code, out, _ = run(capsys, "gradcheck", "--trials", "2")
    report = json.loads(out)
    assert code == EXIT_OK and report["passed"] and report["cases"] == 2 * 6 * 7


def test_gradcheck_input_errors(capsys, tmp_path):
    assert run(capsys, "gradcheck", "--trials", "0")[0] == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"objective": {"kernel": {"type": "laplace"}}}))
    code, out, err = run(capsys, "gradcheck", "--config", str(bad))
    assert code == EXIT_INPUT and "laplace" in err and out == ""


def test_select_recommends_rbf(capsys, tmp_path):
    data = write_jsonl(tmp_path / "d.jsonl", rbf_profile_rows())
    code, out, _ = run(capsys, "select", "--data", str(data))
    report = json.loads(out)
    assert code == EXIT_OK
    assert report["n_triplets"] == 2
    assert report["recommended_kernel"] == "rbf" and report["rule_fired"]["kernel"] == "pnav_high_tat_low"
    assert report["metrics"]["divergence"] == "insufficient data"


def test_select_with_distributions(capsys, tmp_path):
    rows = [dict(r, logp_pos=lp, logp_neg=0.0, policy_dist=[0.5, 0.5], ref_dist=[0.5, 0.5]) for r, lp in zip(rbf_profile_rows(), (1.0, -1.0))]
    code, out, _ = run(capsys, "select", "--data", str(write_jsonl(tmp_path / "d.jsonl", rows)))
    report = json.loads(out)
    assert code == EXIT_OK and report["recommended_divergence"] == "bhattacharyya"


@pytest.mark.parametrize(
    "lines, where",
    [
        (['{"x": [0, 0], "y_pos": [1, 0], "y_neg": [0, 1]}', '{"x": [0, 0], "y_pos": [1, 0, 2], "y_neg": [0, 1]}'], "line 2"),
        (['{"x": [0, 0], "y_pos": [1, 0], "y_neg": [0, 1]}', "", "{not json"], "line 3"),
        (['{"x": [0, 0], "y_pos": [1, 0]}'], "line 1"),
        (['{"x": [0, 0], "y_pos": [1, 0], "y_neg": [0, 1], "extra": 1}'], "line 1"),
        (['{"x": [0, 0], "y_pos": [1, 0], "y_neg": [0, 1], "logp_pos": 0.1}'], "line 1"),
    ],
)
def test_malformed_datasets(capsys, tmp_path, lines, where):
    path = tmp_path / "bad.jsonl"
    path.write_text("\n".join(lines) + "\n")
    code, out, err = run(capsys, "select", "--data", str(path))
    assert code == EXIT_INPUT and where in err and out == ""


def test_train_zero_steps(capsys, tmp_path):
    code, _, _ = run(capsys, "train", "--generator", "separable_clusters", "--steps", "0", "--out", str(tmp_path))
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert code == EXIT_OK and len(rows) == 2
    assert rows[0] == "step,lambda_1,lambda_2,lambda_3,lambda_4,tau_1,tau_2,entropy,loss"
    assert set(json.loads((tmp_path / "summary.json").read_text())) >= {
        "initial_loss", "final_loss", "collapsed", "final_lambda", "final_tau"
    }


def test_train_traces_are_byte_identical(capsys, tmp_path):
    cfg = tmp_path / "hmk.json"
    cfg.write_text(json.dumps({"objective": {"kernel": {"type": "hmk"}}, "train": {"steps": 30}}))
    for name in ("a", "b"):
        assert run(capsys, "train", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path / name))[0] == EXIT_OK
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()


def test_seed_env_overrides_config(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PREFK_SEED", "9")
    run(capsys, "train", "--generator", "random", "--steps", "1", "--out", str(tmp_path))
    assert json.loads((tmp_path / "config.json").read_text())["train"]["seed"] == 9
    run(capsys, "train", "--generator", "random", "--steps", "1", "--seed", "2", "--out", str(tmp_path))
    assert json.loads((tmp_path / "config.json").read_text())["train"]["seed"] == 2


def test_train_hmk_does_not_collapse(capsys, tmp_path):
    cfg = tmp_path / "hmk.json"
    cfg.write_text(json.dumps({"objective": {"kernel": {"type": "hmk"}}, "train": {"entropy_weight": 0.1}}))
    code, out, _ = run(capsys, "train", "--config", str(cfg), "--out", str(tmp_path / "run"))
    assert code == EXIT_OK and json.loads(out)["collapsed"] is False


def test_train_failure_exits_one(capsys, tmp_path):
    # a dataset whose rejected dot product is zero makes the identity kernel's ln r undefined
    data = write_jsonl(tmp_path / "d.jsonl", [{"x": [1.0, 0.0], "y_pos": [1.0, 0.0], "y_neg": [0.0, 1.0]}])
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"objective": {"kernel": {"type": "identity"}}}))
    code, _, err = run(capsys, "train", "--config", str(cfg), "--data", str(data), "--out", str(tmp_path / "run"))
    assert code == EXIT_FAIL and "aborted" in err
    assert (tmp_path / "run" / "trace.csv").exists()


def test_analyze_clusters(capsys, tmp_path):
    pts = [([0, 0], 0), ([0, 1], 0), ([4, 0], 1), ([4, 1], 1)]
    data = write_jsonl(tmp_path / "c.jsonl", [{"point": p, "label": lab} for p, lab in pts])
    code, out, _ = run(capsys, "analyze", "clusters", "--data", str(data))
    assert code == EXIT_OK and json.loads(out)["dbs"] == pytest.approx(0.25)

    single = write_jsonl(tmp_path / "s.jsonl", [{"point": p, "label": 0} for p, _ in pts])
    assert run(capsys, "analyze", "clusters", "--data", str(single))[0] == EXIT_INPUT

    same = write_jsonl(tmp_path / "x.jsonl", [{"point": [0, 0], "label": 0}, {"point": [0, 0], "label": 1}])
    assert run(capsys, "analyze", "clusters", "--data", str(same))[0] == EXIT_FAIL


def test_analyze_htsr_identity_layers(capsys, tmp_path):
    path = tmp_path / "layers.json"
    path.write_text(json.dumps([np.eye(20).tolist(), np.eye(25).tolist()]))
    code, out, _ = run(capsys, "analyze", "htsr", "--data", str(path))
    assert code == EXIT_OK and json.loads(out)["weighted_alpha"] == 0.0


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as info:
        main(["train", "--generator", "spiral", "--out", "x"])
    assert info.value.code == EXIT_INPUT


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "prefk", "config"], capture_output=True, text=True)
    assert proc.returncode == 0 and "objective" in json.loads(proc.stdout)
