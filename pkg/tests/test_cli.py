"""End-to-end command-line tests driven through main(argv)."""

import json
import subprocess
import sys

import numpy as np
import pytest

from pcsvm.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main
from pcsvm.svm import load_model


def _write_csv(tmp_path, name="cli", n_neg=16, n_pos=8, seed=0):
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(n_neg):
        x = rng.normal(size=2)
        lines.append(f"{x[0]:.6f},{x[1]:.6f},neg")
    for _ in range(n_pos):
        x = rng.normal(size=2) + 2.0
        lines.append(f"{x[0]:.6f},{x[1]:.6f},pos")
    path = tmp_path / f"{name}.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _write_config(tmp_path, data_path, **extra):
    lines = [f"datasets = {data_path}", "methods = svm, pcs_svm",
             "c_grid = 1.0", "rbf_gammas = 0.5", "poly_degrees =",
             "folds = 2", "repeats = 1", "inner_folds = 2"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    path = tmp_path / "exp.cfg"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestRun:
    def test_writes_report_and_tables(self, tmp_path):
        cfg = _write_config(tmp_path, _write_csv(tmp_path))
        out = tmp_path / "results"
        code = main(["run", "--config", str(cfg), "--out", str(out)])
        assert code == EXIT_OK
        assert (out / "report.json").exists()
        for fmt in ("md", "csv"):
            for stem in ("f_measure_rbf", "g_mean_rbf", "auc_rbf",
                         "runtime_rbf"):
                assert (out / f"{stem}.{fmt}").exists()
        payload = json.loads((out / "report.json").read_text())
        assert payload["config"]["folds"] == 2

    def test_partial_results_exit_one(self, tmp_path, capsys):
        data = _write_csv(tmp_path, name="tiny", n_neg=20, n_pos=5)
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(f"datasets = {data}\nmethods = svm, svm_smote\n"
                       "c_grid = 1.0\nrbf_gammas = 0.5\npoly_degrees =\n"
                       "folds = 2\nrepeats = 1\ninner_folds = 2\n")
        code = main(["run", "--config", str(cfg),
                     "--out", str(tmp_path / "out")])
        assert code == EXIT_PARTIAL
        assert "partial" in capsys.readouterr().err

    def test_bad_config_exit_two(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("datasets = a.csv\nbogus_key = 1\n")
        code = main(["run", "--config", str(cfg),
                     "--out", str(tmp_path / "out")])
        assert code == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_missing_config_exit_two(self, tmp_path):
        code = main(["run", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path / "out")])
        assert code == EXIT_CONFIG


class TestBench:
    def test_emits_fold_json(self, tmp_path, capsys):
        data = _write_csv(tmp_path)
        code = main(["bench", "--dataset", str(data), "--method", "pcs_svm",
                     "--kernel", "rbf:gamma=0.5", "--folds", "3"])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["dataset"] == "cli"
        assert payload["method"] == "pcs_svm"
        assert payload["kernel"] == "rbf:gamma=0.5"
        assert len(payload["folds"]) == 3
        assert payload["errors"] == []
        for key in ("f_measure", "g_mean", "auc", "runtime"):
            assert key in payload["mean"]

    def test_failed_folds_exit_one(self, tmp_path, capsys):
        data = _write_csv(tmp_path, name="tiny", n_neg=20, n_pos=5)
        code = main(["bench", "--dataset", str(data), "--method",
                     "svm_smote", "--kernel", "rbf:gamma=0.5",
                     "--folds", "2"])
        assert code == EXIT_PARTIAL
        payload = json.loads(capsys.readouterr().out)
        assert payload["folds"] == []
        assert len(payload["errors"]) == 2

    def test_unknown_method_exit_two(self, tmp_path, capsys):
        data = _write_csv(tmp_path)
        code = main(["bench", "--dataset", str(data), "--method", "boost",
                     "--kernel", "linear"])
        assert code == EXIT_CONFIG
        assert "unknown method" in capsys.readouterr().err

    def test_bad_kernel_spec_exit_two(self, tmp_path, capsys):
        data = _write_csv(tmp_path)
        code = main(["bench", "--dataset", str(data), "--method", "svm",
                     "--kernel", "rbf:degree=3"])
        assert code == EXIT_CONFIG

    def test_missing_dataset_exit_two(self, tmp_path):
        code = main(["bench", "--dataset", str(tmp_path / "absent.csv"),
                     "--method", "svm", "--kernel", "linear"])
        assert code == EXIT_CONFIG

    def test_save_model_round_trips(self, tmp_path, capsys):
        data = _write_csv(tmp_path)
        model_path = tmp_path / "model.txt"
        code = main(["bench", "--dataset", str(data), "--method", "svm",
                     "--kernel", "rbf:gamma=0.5", "--folds", "2",
                     "--save-model", str(model_path)])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["model_file"] == str(model_path)
        model = load_model(model_path)
        assert model.n_support > 0


class TestReport:
    def test_regenerates_tables(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, _write_csv(tmp_path))
        out = tmp_path / "results"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        before = (out / "g_mean_rbf.md").read_text()
        (out / "g_mean_rbf.md").unlink()
        code = main(["report", "--in", str(out), "--format", "md"])
        assert code == EXIT_OK
        assert (out / "g_mean_rbf.md").read_text() == before
        listed = capsys.readouterr().out.splitlines()
        assert str(out / "g_mean_rbf.md") in listed

    def test_missing_report_exit_two(self, tmp_path, capsys):
        code = main(["report", "--in", str(tmp_path), "--format", "md"])
        assert code == EXIT_CONFIG
        assert "not found" in capsys.readouterr().err


class TestEntryPoint:
    def test_installed_script_help(self):
        proc = subprocess.run(["pcsvm", "--help"], capture_output=True,
                              text=True)
        assert proc.returncode == 0
        for word in ("run", "bench", "report", "Exit codes"):
            assert word in proc.stdout

    def test_run_help_documents_config_keys(self):
        proc = subprocess.run(["pcsvm", "run", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "cell_budget" in proc.stdout
