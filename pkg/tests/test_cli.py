import json

import numpy as np
import pytest

from cdmshape.cli import main
from cdmshape.config import small_config


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run gen -> train -> eval once on a tiny config; share the artifacts."""
    root = tmp_path_factory.mktemp("pipeline")
    cfg = small_config(sample_rate=5.0)
    cfg_path = root / "run.json"
    cfg.save(cfg_path)
    data, models, reports = root / "data", root / "models", root / "reports"
    assert main(["gen", "--config", str(cfg_path), "--out-dir", str(data)]) == 0
    assert main(["train", "--config", str(cfg_path), "--data", str(data / "train.csv"),
                 "--out-dir", str(models)]) == 0
    assert main(["eval", "--config", str(cfg_path), "--data-dir", str(data),
                 "--model-dir", str(models), "--out-dir", str(reports)]) == 0
    return {"root": root, "cfg": cfg_path, "data": data, "models": models,
            "reports": reports}


class TestGen:
    def test_outputs_exist(self, pipeline):
        for name in ("train.csv", "test_id.csv", "test_ood.csv", "gen_stats.json"):
            assert (pipeline["data"] / name).exists()
        stats = json.loads((pipeline["data"] / "gen_stats.json").read_text())
        assert stats["n_skipped"] == 0
        assert stats["max_penetration_mm"] <= 0.05

    def test_gen_reruns_byte_identical(self, pipeline, tmp_path):
        other = tmp_path / "data2"
        assert main(["gen", "--config", str(pipeline["cfg"]), "--out-dir", str(other)]) == 0
        for name in ("train.csv", "test_id.csv", "test_ood.csv", "gen_stats.json"):
            assert (other / name).read_bytes() == (pipeline["data"] / name).read_bytes()


class TestTrain:
    def test_checkpoints_and_loss_curve(self, pipeline):
        for name in ("dnn.ckpt", "lin.ckpt", "poly.ckpt"):
            assert (pipeline["models"] / name).exists()
        lines = (pipeline["models"] / "loss_curve.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_mse,val_mse"
        assert len(lines) == 1 + 8  # epochs in the small config


class TestEval:
    def test_report_files(self, pipeline):
        text = (pipeline["reports"] / "report.txt").read_text()
        assert "Tip point estimation error" in text
        payload = json.loads((pipeline["reports"] / "report.json").read_text())
        assert set(payload["summaries"]) == {"lin", "poly", "dnn"}
        unc = (pipeline["reports"] / "uncertainty.csv").read_text().splitlines()
        assert unc[0] == "tip_std_mm,tip_error_mm,tag"
        assert len(unc) - 1 == payload["n_uncertainty_rows"]


class TestReport:
    def test_uncertainty_artifacts(self, pipeline, tmp_path):
        out = tmp_path / "rep"
        assert main(["report", "--config", str(pipeline["cfg"]),
                     "--data-dir", str(pipeline["data"]),
                     "--model-dir", str(pipeline["models"]),
                     "--out-dir", str(out)]) == 0
        summary = json.loads((out / "fp_summary.json").read_text())
        assert "fp_counts" in summary and "spearman" in summary
        assert (out / "uncertainty.csv").exists()


class TestInfer:
    def test_predictions_csv(self, pipeline, tmp_path):
        out = tmp_path / "shapes.csv"
        assert main(["infer", "--model", str(pipeline["models"] / "dnn.ckpt"),
                     "--input", str(pipeline["data"] / "test_id.csv"),
                     "--output", str(out), "--k", "10", "--seed", "1"]) == 0
        lines = out.read_text().splitlines()
        header = lines[0].split(",")
        assert len(header) == 120
        assert header[0] == "p1x" and header[59] == "p30y"
        assert header[60] == "u1x" and header[-1] == "u30y"
        n_inputs = len((pipeline["data"] / "test_id.csv").read_text().splitlines()) - 1
        assert len(lines) - 1 == n_inputs
        row = np.array([float(v) for v in lines[1].split(",")])
        assert np.all(np.isfinite(row))
        assert np.all(row[60:] >= 0)  # intervals are non-negative

    def test_same_seed_identical_output(self, pipeline, tmp_path):
        args = ["infer", "--model", str(pipeline["models"] / "dnn.ckpt"),
                "--input", str(pipeline["data"] / "test_ood.csv"), "--k", "5", "--seed", "3"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--output", str(a)]) == 0
        assert main(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_baseline_checkpoint_rejected(self, pipeline, tmp_path, capsys):
        code = main(["infer", "--model", str(pipeline["models"] / "lin.ckpt"),
                     "--input", str(pipeline["data"] / "test_id.csv"),
                     "--output", str(tmp_path / "x.csv")])
        assert code == 5
        assert capsys.readouterr().err.startswith("error:")


class TestVerify:
    def test_fresh_checkout_verifies(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "gradients" in out and "all checks passed" in out


class TestExitCodes:
    def test_missing_config_path(self, capsys):
        assert main(["gen", "--config", "/nonexistent/cfg.json"]) == 3
        err = capsys.readouterr().err
        assert err.startswith("error:missing-path:") and err.count("\n") == 1

    def test_invalid_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"training": {"epohcs": 1}}')
        assert main(["gen", "--config", str(bad)]) == 4
        assert capsys.readouterr().err.startswith("error:config:")

    def test_config_without_scenarios(self, tmp_path, capsys):
        empty = tmp_path / "empty.json"
        empty.write_text("{}")
        assert main(["gen", "--config", str(empty)]) == 4
        capsys.readouterr()

    def test_unknown_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
