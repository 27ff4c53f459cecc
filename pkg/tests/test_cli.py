import math
import os

import numpy as np

from grassopt import checks, cli, manifold, runner
from grassopt.manifold import GrassmannPoint
from grassopt.metrics import METRIC_FIELDS
from grassopt.nn import load_checkpoint

FAST = [
    "--epochs", "2", "--n_per_class", "30", "--dim", "8", "--hidden", "5,4",
    "--batch_size", "16",
]


def _train(tmp_path, name, extra=()):
    out = str(tmp_path / name)
    code = cli.main(["train", "--out_dir", out, *FAST, *extra])
    return code, out


def test_train_writes_metrics_and_checkpoint(tmp_path):
    code, out = _train(tmp_path, "run")
    assert code == 0
    lines = (open(os.path.join(out, "metrics.csv"))).read().splitlines()
    assert lines[0] == ",".join(METRIC_FIELDS)
    assert len(lines) == 1 + 3  # header + initial eval + 2 epochs
    trainer = load_checkpoint(os.path.join(out, "checkpoint.npz"))
    assert trainer.optimizer == "sgd-g"
    assert os.path.exists(os.path.join(out, "config.ini"))


def test_train_epochs_zero_initial_evaluation_only(tmp_path):
    code, out = _train(tmp_path, "zero", ["--epochs", "0"])
    assert code == 0
    lines = open(os.path.join(out, "metrics.csv")).read().splitlines()
    assert len(lines) == 2  # header + initial record
    assert lines[1].startswith("0,0,")
    load_checkpoint(os.path.join(out, "checkpoint.npz"))  # valid checkpoint


def test_train_determinism_byte_identical(tmp_path):
    _, out1 = _train(tmp_path, "a", ["--seed", "3"])
    _, out2 = _train(tmp_path, "b", ["--seed", "3"])
    bytes1 = open(os.path.join(out1, "metrics.csv"), "rb").read()
    bytes2 = open(os.path.join(out2, "metrics.csv"), "rb").read()
    assert bytes1 == bytes2


def test_train_jsonl_mode(tmp_path):
    import json

    code, out = _train(tmp_path, "jl", ["--metrics_format", "jsonl"])
    assert code == 0
    lines = open(os.path.join(out, "metrics.jsonl")).read().splitlines()
    assert len(lines) == 3
    record = json.loads(lines[0])
    assert set(record) == set(METRIC_FIELDS)


def test_train_rejects_unknown_key_before_running(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[optimizer]\nmomentum_rate = 0.5\n")
    code = cli.main(["train", "--config", str(path), "--out_dir", str(tmp_path / "x")])
    assert code == 1
    assert not (tmp_path / "x").exists()  # failed before allocating outputs


def test_train_flag_value_validation(tmp_path):
    code = cli.main(["train", "--batch_size", "1", "--out_dir", str(tmp_path / "y")])
    assert code == 1


def test_train_runtime_abort_exit_2_and_last_good_checkpoint(tmp_path):
    out = str(tmp_path / "abort")
    # an absurd Euclidean rate makes the loss overflow within an epoch
    with np.errstate(all="ignore"):
        code = cli.main([
            "train", "--out_dir", out, *FAST, "--optimizer", "sgd", "--eta_e", "1e18",
        ])
    assert code == 2
    # the initial-evaluation checkpoint survives as the last good state
    trainer = load_checkpoint(os.path.join(out, "checkpoint.npz"))
    assert trainer.optimizer == "sgd"
    lines = open(os.path.join(out, "metrics.csv")).read().splitlines()
    assert len(lines) >= 2  # header + at least the initial record (valid prefix)


def test_output_dir_env_override(tmp_path, monkeypatch):
    target = tmp_path / "env_out"
    monkeypatch.setenv(runner.OUTPUT_DIR_ENV, str(target))
    code = cli.main(["train", *FAST])
    assert code == 0
    assert (target / "metrics.csv").exists()


def test_compare_single_optimizer(tmp_path, capsys):
    out = str(tmp_path / "cmp1")
    code = cli.main([
        "compare", "--optimizers", "sgd", "--runs", "2", "--out_dir", out, *FAST,
    ])
    assert code == 0
    text = capsys.readouterr().out
    lines = [l for l in text.splitlines() if l]
    assert lines[0] == "optimizer,runs,median_final_test_error"
    assert lines[1].startswith("sgd,2,")


def test_compare_median_is_order_statistic(tmp_path):
    out = str(tmp_path / "cmp2")
    summary, rows = runner.run_compare(
        None,
        {"epochs": "1", "n_per_class": "20", "dim": "6", "hidden": "4,3",
         "batch_size": "10", "seed": "0"},
        ["sgd-g"],
        runs=5,
        out_dir=out,
    )
    errors = sorted(float(r.split(",")[2]) for r in rows)
    median_line = summary.splitlines()[1]
    assert float(median_line.split(",")[2]) == errors[2]  # 3rd order statistic of 5
    per_run = open(os.path.join(out, "compare_runs.csv")).read().splitlines()
    assert per_run[0] == "optimizer,seed,final_test_error"
    assert len(per_run) == 6
    # seeds recorded as base_seed + i
    assert [r.split(",")[1] for r in per_run[1:]] == ["0", "1", "2", "3", "4"]


def test_compare_unknown_optimizer(tmp_path):
    code = cli.main(["compare", "--optimizers", "sgd,newton", "--runs", "1",
                     "--out_dir", str(tmp_path / "cmp3")])
    assert code == 1


def test_check_command_passes():
    assert cli.main(["check"]) == 0


def test_check_reports_per_suite_counts(capsys):
    cli.main(["check"])
    text = capsys.readouterr().out
    assert "manifold: 7/7 properties passed" in text
    assert "regularizer:" in text
    assert "gradcheck:" in text


def test_check_detects_faulty_exp_map(monkeypatch):
    # Fault injection: exp_map that skips renormalization and seeds drift must
    # trip the unit-norm property.
    real_exp = manifold.exp_map

    def drifting_exp(y, h):
        nh = h.norm()
        if nh < manifold.DEGENERATE_STEP:
            return y
        out = y.y * math.cos(nh) + h.v * (math.sin(nh) / nh)
        out = out * (1.0 + 1e-6)  # drift, no renormalization
        point = GrassmannPoint.__new__(GrassmannPoint)
        object.__setattr__(point, "y", out)
        return point

    monkeypatch.setattr(manifold, "exp_map", drifting_exp)
    results = checks.run_manifold_suite(seed=0, instances=50, dims=(8,))
    by_name = {r.name: r for r in results}
    assert not by_name["unit_norm_closure"].passed
    assert by_name["unit_norm_closure"].worst > 1e-12
    monkeypatch.setattr(manifold, "exp_map", real_exp)


def test_check_failure_exit_code(monkeypatch):
    # the CLI maps any failed property to exit 1
    monkeypatch.setattr(
        checks, "run_all",
        lambda seed=0: [checks.CheckResult("manifold", "probe", False, 1.0, 0.0, 1)],
    )
    assert cli.main(["check"]) == 1
