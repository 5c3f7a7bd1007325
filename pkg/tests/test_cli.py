import csv
import json

import numpy as np
import pytest

from anovadistill.cli import main
from anovadistill.data import Dataset, IndexSet, unit_specs
from anovadistill.model import fit, identifiable_transform
from anovadistill.predictor import CallablePredictor
from anovadistill.suite import true_interaction_pairs


def read_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def stripped_bytes(path):
    payload = read_report(path)
    payload.pop("meta")
    payload["config"].pop("out", None)
    return json.dumps(payload, sort_keys=True)


class TestScreenCommand:
    def test_f6_small_tau_selects_exactly_true_pairs(self, tmp_path):
        rc = main([
            "screen", "--predictor", "analytic:F6", "--data", "synthetic:2000",
            "--K", "2", "--tau", "1e-05", "--seed", "3", "--out", str(tmp_path),
        ])
        assert rc == 0
        rep = read_report(tmp_path / "screening.json")
        level2 = next(lv for lv in rep["result"]["levels"] if lv["k"] == 2)
        got = {tuple(j) for j in level2["selected"]}
        want = {tuple(j) for j in true_interaction_pairs("F6")}
        # V keeps only features above the relative floor, so the screen sees
        # a subset of all pairs; everything it selects must be a true pair
        # and the two dominant pairs must be present
        assert got <= want
        assert {(0, 1), (2, 3)} <= got

    def test_default_tau_no_false_pairs(self, tmp_path):
        rc = main([
            "screen", "--predictor", "analytic:F6", "--data", "synthetic:2000",
            "--K", "2", "--seed", "3", "--out", str(tmp_path),
        ])
        assert rc == 0
        rep = read_report(tmp_path / "screening.json")
        level2 = next(lv for lv in rep["result"]["levels"] if lv["k"] == 2)
        got = {tuple(j) for j in level2["selected"]}
        assert got <= {tuple(j) for j in true_interaction_pairs("F6")}

    def test_missing_data_file_exit_2(self, tmp_path, capsys):
        rc = main([
            "screen", "--predictor", "analytic:F1", "--data",
            str(tmp_path / "absent.csv"), "--out", str(tmp_path),
        ])
        assert rc == 2
        assert "not found" in capsys.readouterr().err

    def test_k1_leaves_upper_levels_empty(self, tmp_path):
        rc = main([
            "screen", "--predictor", "analytic:F3", "--data", "synthetic:500",
            "--K", "1", "--seed", "0", "--out", str(tmp_path),
        ])
        assert rc == 0
        rep = read_report(tmp_path / "screening.json")
        assert [lv["k"] for lv in rep["result"]["levels"]] == [1]
        assert all(len(t) == 1 for t in rep["result"]["R"])

    def test_screen_determinism(self, tmp_path):
        for sub in ("a", "b"):
            rc = main([
                "screen", "--predictor", "analytic:F4", "--data", "synthetic:800",
                "--K", "2", "--seed", "11", "--out", str(tmp_path / sub),
            ])
            assert rc == 0
        assert stripped_bytes(tmp_path / "a" / "screening.json") == stripped_bytes(
            tmp_path / "b" / "screening.json"
        )


class TestDistillCommand:
    def test_f6_end_to_end(self, tmp_path):
        rc = main([
            "distill", "--predictor", "analytic:F6", "--data", "synthetic:2000",
            "--K", "3", "--seed", "5", "--out", str(tmp_path),
        ])
        assert rc == 0
        rep = read_report(tmp_path / "fit_report.json")["result"]
        assert rep["holdout_r2"] >= 0.9
        assert (tmp_path / "model.json").exists()
        model = read_report(tmp_path / "screening.json")  # also written
        assert model["result"]["V"]

    def test_main_effects_only_override(self, tmp_path):
        cfg = {
            "predictor": "analytic:F6",
            "data": "synthetic:1000",
            "seed": 1,
            "screening": {"K": 2},
            "main_effects_only": True,
            "out": str(tmp_path),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        rc = main(["distill", "--config", str(cfg_path)])
        assert rc == 0
        rep = read_report(tmp_path / "fit_report.json")["result"]
        scr = read_report(tmp_path / "screening.json")["result"]
        assert rep["n_terms"] == len(scr["V"])
        assert list(rep["components_per_order"]) == ["1"]

    def test_reuses_existing_screening(self, tmp_path):
        rc = main([
            "screen", "--predictor", "analytic:F6", "--data", "synthetic:1000",
            "--K", "2", "--seed", "2", "--out", str(tmp_path),
        ])
        assert rc == 0
        rc = main([
            "distill", "--predictor", "analytic:F6", "--data", "synthetic:1000",
            "--seed", "2", "--out", str(tmp_path / "fit"),
            "--screening-result", str(tmp_path / "screening.json"),
        ])
        assert rc == 0
        assert (tmp_path / "fit" / "model.json").exists()


class TestExplainCommand:
    @staticmethod
    def make_model_and_data(tmp_path, seed=0):
        rng = np.random.default_rng(seed)
        data = Dataset(unit_specs(3), rng.random((2500, 3)))
        pred = CallablePredictor(lambda X: 3.0 * X[:, 0] + X[:, 1], 3)
        model = identifiable_transform(
            fit(pred, data, [IndexSet.of(0), IndexSet.of(1), IndexSet.of(0, 1)]), data
        )
        model_path = tmp_path / "model.json"
        model.save(model_path)
        data_path = tmp_path / "train.csv"
        with open(data_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x0", "x1", "x2"])
            w.writerows(data.values.tolist())
        return model_path, data_path

    def test_global_importances_and_pd_tables(self, tmp_path):
        model_path, data_path = self.make_model_and_data(tmp_path)
        rc = main([
            "explain", "--model", str(model_path), "--data", str(data_path),
            "--out", str(tmp_path / "out"),
        ])
        assert rc == 0
        rep = read_report(tmp_path / "out" / "global_importance.json")["result"]
        norm = rep["global_shap"]["normalized"]
        assert norm[0] == 1.0
        assert norm[1] == pytest.approx(1 / 9, rel=0.1)
        assert norm[2] == 0.0
        pd_pair = tmp_path / "out" / "pd" / "0x1.csv"
        with open(pd_pair, encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + 10 * 10  # header + resolution^2

    def test_local_shap_rows(self, tmp_path):
        model_path, data_path = self.make_model_and_data(tmp_path)
        rows_path = tmp_path / "rows.csv"
        rows_path.write_text("x0,x1,x2\n0.2,0.5,0.9\n0.8,0.1,0.3\n", encoding="utf-8")
        rc = main([
            "explain", "--model", str(model_path), "--data", str(data_path),
            "--rows", str(rows_path), "--out", str(tmp_path / "out"),
        ])
        assert rc == 0
        with open(tmp_path / "out" / "local_shap.csv", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x0", "x1", "x2"]
        assert len(rows) == 3
        phi = [float(v) for v in rows[1]]
        assert phi[0] != 0.0 and phi[2] == 0.0

    def test_empty_rows_file_warns_and_skips(self, tmp_path, capsys):
        model_path, data_path = self.make_model_and_data(tmp_path)
        rows_path = tmp_path / "rows.csv"
        rows_path.write_text("x0,x1,x2\n", encoding="utf-8")
        rc = main([
            "explain", "--model", str(model_path), "--data", str(data_path),
            "--rows", str(rows_path), "--out", str(tmp_path / "out"),
        ])
        assert rc == 0
        assert not (tmp_path / "out" / "local_shap.csv").exists()
        assert "empty" in capsys.readouterr().err

    def test_missing_model_exit_2(self, tmp_path):
        rc = main([
            "explain", "--model", str(tmp_path / "nope.json"),
            "--data", "synthetic:100", "--out", str(tmp_path),
        ])
        assert rc == 2


class TestBenchmarkCommand:
    def test_reduced_suite(self, tmp_path):
        cfg = {
            "benchmark": {"functions": ["F4", "F6"], "n": 500},
            "seed": 0,
            "out": str(tmp_path),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        rc = main(["benchmark", "--config", str(cfg_path)])
        assert rc == 0
        rep = read_report(tmp_path / "benchmark.json")["result"]
        assert set(rep["functions"]) == {"F4", "F6"}
        for f in rep["functions"].values():
            assert 0.0 <= f["auroc"] <= 1.0
        assert rep["functions"]["F6"]["auroc"] >= 0.95

    def test_unknown_function_exit_2(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(
            json.dumps({"benchmark": {"functions": ["F99"]}, "out": str(tmp_path)}),
            encoding="utf-8",
        )
        assert main(["benchmark", "--config", str(cfg_path)]) == 2

    def test_benchmark_determinism(self, tmp_path):
        for sub in ("a", "b"):
            cfg_path = tmp_path / f"cfg_{sub}.json"
            cfg_path.write_text(
                json.dumps({
                    "benchmark": {"functions": ["F6"], "n": 400},
                    "seed": 7,
                    "out": str(tmp_path / sub),
                }),
                encoding="utf-8",
            )
            assert main(["benchmark", "--config", str(cfg_path)]) == 0
        a = read_report(tmp_path / "a" / "benchmark.json")
        b = read_report(tmp_path / "b" / "benchmark.json")
        a.pop("meta"), b.pop("meta")
        a["config"].pop("out"), b["config"].pop("out")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


class TestExitCodes:
    def test_predictor_failure_exit_3(self, tmp_path, capsys):
        cfg = {
            "predictor": {"external": ["false"], "p": 4},
            "data": "synthetic:100",
            "out": str(tmp_path),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        rc = main(["screen", "--config", str(cfg_path)])
        assert rc == 3
        assert "predictor" in capsys.readouterr().err

    def test_numerical_failure_exit_4(self, tmp_path, capsys):
        # zero ridge with overlapping mains + pair makes the normal
        # equations singular
        cfg = {
            "predictor": "analytic:F6",
            "data": "synthetic:400",
            "seed": 0,
            "screening": {"K": 2},
            "fit": {"ridge": 0.0},
            "out": str(tmp_path),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        rc = main(["distill", "--config", str(cfg_path)])
        assert rc == 4
        assert "ridge" in capsys.readouterr().err
