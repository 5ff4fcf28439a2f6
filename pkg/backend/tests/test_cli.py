import json

import pytest

import cokern
import config
from services.experiment_service import cmd_dlog_demo


@pytest.fixture
def run_cli(tmp_path, capsys):
    """Invoke `cokern <command>` against a tmp output dir; returns (exit code, parsed stdout)."""
    config = tmp_path / "experiment.json"
    config.write_text(json.dumps({"epsilon": 0, "n": 3, "train_per_label": 4, "test_per_label": 5}))
    out = tmp_path / "out"

    def run(*args, parse=True):
        code = cokern.main([*args, "--config", str(config), "--out", str(out)])
        stdout = capsys.readouterr().out
        return code, (json.loads(stdout) if parse and code == 0 else stdout)

    run.out = out
    run.config = config
    return run


def test_gen_lce_writes_deterministic_files(run_cli, tmp_path):
    code, summary = run_cli("gen-lce")
    assert code == 0
    assert summary["train"] == 8 and summary["test"] == 10
    train = (run_cli.out / "train.csv").read_text().splitlines()
    assert len(train) == 9
    assert len(train[0].split(",")) == 7
    assert len((run_cli.out / "test.csv").read_text().splitlines()) == 11
    assert (run_cli.out / "problem.json").exists()

    again = tmp_path / "again"
    assert cokern.main(["gen-lce", "--config", str(run_cli.config), "--out", str(again)]) == 0
    for name in ("train.csv", "test.csv", "problem.json"):
        assert (again / name).read_bytes() == (run_cli.out / name).read_bytes()


def test_full_pipeline(run_cli):
    run_cli("gen-lce")
    code, kernel = run_cli("kernel")
    assert code == 0
    assert kernel["shape"] == [8, 8]
    assert kernel["path"].endswith("kernel_train.csv")
    assert (run_cli.out / "gram_train.csv").exists()
    rows = (run_cli.out / "kernel_train.csv").read_text().splitlines()[1:]
    assert all(float(r.split(",")[i]) == 1.0 for i, r in enumerate(rows))

    code, trained = run_cli("train")
    assert code == 0
    assert trained["converged"] and trained["train_accuracy"] == 1.0

    code, _ = run_cli("kernel", "--rows", str(run_cli.out / "test.csv"), "--cols", str(run_cli.out / "train.csv"))
    assert code == 0
    assert (run_cli.out / "kernel_test_train.csv").exists()

    code, predicted = run_cli("predict")
    assert code == 0
    assert predicted["labels"] == [-1] * 5 + [1] * 5
    assert (run_cli.out / "predictions.csv").exists()

    code, metrics = run_cli("diagnose")
    assert code == 0
    assert metrics["accuracy"] == 1.0
    assert metrics["hs_distance"] > 0
    assert "ideal" in metrics["tvd"]
    for name in ("metrics.json", "decision_report.json", "decision_values.csv", "hamming.csv"):
        assert (run_cli.out / name).exists()


def test_predict_on_training_kernel_returns_training_labels(run_cli):
    run_cli("gen-lce")
    run_cli("kernel")
    run_cli("train")
    code, predicted = run_cli("predict", "--kernel", str(run_cli.out / "kernel_train.csv"))
    assert code == 0
    assert predicted["labels"] == [-1] * 4 + [1] * 4


def test_checksum_mismatch_is_rejected(run_cli):
    run_cli("gen-lce")
    run_cli("kernel")
    code, _ = run_cli("train", "--data", str(run_cli.out / "test.csv"), parse=False)
    assert code == 1
    assert not (run_cli.out / "model.json").exists()


def test_align_with_zero_steps(run_cli):
    run_cli.config.write_text(json.dumps({"epsilon": 0, "n": 3, "train_per_label": 2,
                                          "test_per_label": 2, "spsa_steps": 0}))
    code, result = run_cli("align")
    assert code == 0
    assert result["records"] == 1
    assert len((run_cli.out / "trace.jsonl").read_text().splitlines()) == 1
    for name in ("model.json", "kernel_aligned.csv", "lambda_star.json", "cost_vs_step.csv"):
        assert (run_cli.out / name).exists()


def test_invalid_config_exits_one(run_cli):
    run_cli.config.write_text(json.dumps({"epsilon": -1}))
    code, _ = run_cli("gen-lce", parse=False)
    assert code == 1
    run_cli.config.write_text("{broken")
    code, _ = run_cli("gen-lce", parse=False)
    assert code == 1


def test_usage_errors_exit_one():
    with pytest.raises(SystemExit) as exc:
        cokern.main(["frobnicate"])
    assert exc.value.code == 1


def test_dlog_demo(capsys):
    assert cokern.main(["dlog-demo", "--p", "7", "--g", "3", "--k", "2"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["train_accuracy"] >= 0.5
    assert result["train_elements"] == [1, 2, 3, 4, 5, 6]


def test_fourier_check_exit_codes(capsys):
    assert cokern.main(["fourier-check", "--group", "Z5"]) == 0
    assert "Z5 / uniform" in capsys.readouterr().out
    assert cokern.main(["fourier-check", "--group", "Q8"]) == 1


def test_dlog_demo_identity_kernel_warns(caplog):
    with caplog.at_level("WARNING"):
        result = cmd_dlog_demo(p=7, g=3, k=0)
    assert result["identity_kernel"] is True
    assert "identity matrix" in caplog.text


def test_dlog_demo_rejects_bad_interval(capsys):
    assert cokern.main(["dlog-demo", "--p", "7", "--s", "4"]) == 1


def test_unconverged_training_exits_two_without_a_model(run_cli, monkeypatch):
    run_cli("gen-lce")
    run_cli("kernel")
    monkeypatch.setattr(config, "SVM_MAX_ITER", 0)
    code, _ = run_cli("train", parse=False)
    assert code == 2
    assert not (run_cli.out / "model.json").exists()

    code, _ = run_cli("align", parse=False)
    assert code == 2
    assert not (run_cli.out / "model.json").exists()


def test_dlog_demo_reads_seed_and_c_from_config(tmp_path, capsys):
    experiment = tmp_path / "dlog.json"
    experiment.write_text(json.dumps({"data_seed": 5, "C": 0.05}))
    out = tmp_path / "dlog"
    assert cokern.main(["dlog-demo", "--p", "11", "--g", "2", "--m", "6", "--config", str(experiment),
                        "--out", str(out)]) == 0
    result = json.loads(capsys.readouterr().out)
    expected = cmd_dlog_demo(p=11, g=2, m=6, seed=5, C=0.05)
    assert result["seed"] == 5
    assert result["train_elements"] == expected["train_elements"]
    assert result["objective"] == pytest.approx(expected["objective"])
    assert (out / "dlog_demo.json").exists()

    assert cokern.main(["dlog-demo", "--p", "11", "--g", "2", "--m", "6", "--config", str(experiment),
                        "--out", str(out), "--C", "2.0"]) == 0
    overridden = json.loads(capsys.readouterr().out)
    assert overridden["objective"] == pytest.approx(cmd_dlog_demo(p=11, g=2, m=6, seed=5, C=2.0)["objective"])


def test_fourier_check_takes_no_config(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cokern.main(["fourier-check", "--group", "Z5", "--config", str(tmp_path / "unused.json")])
    assert exc.value.code == 1
