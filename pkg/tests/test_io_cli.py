import json
import os

import numpy as np
import pytest

from partwise import (
    InputError,
    SchemaError,
    load_model,
    load_table,
    save_model,
    split_response,
)
from partwise.cli import main
from partwise.estimator import FitParams, fit_model, predict
from partwise.io import document_to_model, dumps_document, model_to_document
from partwise.simulate import SETTINGS, generate


def write_csv(path, header, rows, delim=","):
    with open(path, "w") as fh:
        fh.write(delim.join(header) + "\n")
        for r in rows:
            fh.write(delim.join(str(v) for v in r) + "\n")


@pytest.fixture
def reg_csv(tmp_path):
    rng = np.random.default_rng(42)
    data = generate(SETTINGS["reg1"], 120, rng, sigma=1.0)
    path = tmp_path / "train.csv"
    header = list(data.column_names) + ["y"]
    rows = np.column_stack([data.X, data.y])
    write_csv(path, header, rows.tolist())
    return str(path)


class TestLoadTable:
    def test_happy_path(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(p, ["a", "b"], [[1, 2.5], [3, 4]])
        header, table = load_table(str(p))
        assert header == ["a", "b"]
        assert table.shape == (2, 2)

    def test_non_numeric_cell_position(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(p, ["a", "b"], [[1, 2], [3, "oops"]])
        with pytest.raises(InputError, match="row 3, column 'b'"):
            load_table(str(p))

    def test_non_finite_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(p, ["a"], [[1], ["inf"]])
        with pytest.raises(InputError, match="non-finite"):
            load_table(str(p))

    def test_ragged_row(self, tmp_path):
        p = tmp_path / "t.csv"
        with open(p, "w") as fh:
            fh.write("a,b\n1,2\n3\n")
        with pytest.raises(InputError, match="row 3"):
            load_table(str(p))

    def test_missing_response(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(p, ["a", "b"], [[1, 2]])
        header, table = load_table(str(p))
        with pytest.raises(InputError, match="response column"):
            split_response(header, table, "z")

    def test_custom_delimiter(self, tmp_path):
        p = tmp_path / "t.tsv"
        write_csv(p, ["a", "b"], [[1, 2]], delim="\t")
        header, table = load_table(str(p), delim="\t")
        assert header == ["a", "b"]


class TestModelDocument:
    def _fit(self):
        rng = np.random.default_rng(11)
        data = generate(SETTINGS["reg1"], 150, rng, sigma=1.0)
        return data, fit_model(data, "regression", FitParams(seed=3)).model

    def test_round_trip_byte_identical(self, tmp_path):
        _, model = self._fit()
        p = tmp_path / "m.json"
        save_model(model, str(p))
        first = open(p, "rb").read()
        reloaded = load_model(str(p))
        save_model(reloaded, str(p))
        second = open(p, "rb").read()
        assert first == second

    def test_document_fields(self):
        _, model = self._fit()
        doc = model_to_document(model)
        assert doc["version"] == "partwise-v1"
        assert doc["task"] == "regression"
        assert set(doc["mdl"]) == {
            "predictor_code",
            "per_predictor_code",
            "region_param_code",
            "residual_code",
            "total",
        }
        assert len(doc["region_fits"]) == model.config.num_regions
        back = document_to_model(json.loads(dumps_document(doc)))
        assert back.mdl.total == model.mdl.total
        assert back.config.breaks == model.config.breaks

    def test_unknown_version_rejected(self):
        _, model = self._fit()
        doc = model_to_document(model)
        doc["version"] = "partwise-v999"
        with pytest.raises(SchemaError):
            document_to_model(doc)

    def test_predict_training_rss_matches_fit_stats(self):
        data, model = self._fit()
        preds = predict(model, data.X)
        rss = float(np.sum((data.y - preds) ** 2))
        stored = sum(f.fit_stat for f in model.region_fits)
        assert rss == pytest.approx(stored, abs=1e-8)

    def test_predict_column_mismatch(self):
        data, model = self._fit()
        with pytest.raises(SchemaError):
            predict(model, data.X[:, :2])


class TestCli:
    def test_fit_predict_round_trip(self, reg_csv, tmp_path, capsys):
        model_path = str(tmp_path / "model.json")
        code = main(
            [
                "fit",
                "--data",
                reg_csv,
                "--response",
                "y",
                "--task",
                "regression",
                "--seed",
                "7",
                "--out",
                model_path,
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "mdl breakdown" in out
        assert os.path.exists(model_path)

        pred_path = str(tmp_path / "pred.csv")
        code = main(
            ["predict", "--model", model_path, "--data", reg_csv, "--out", pred_path]
        )
        assert code == 0
        preds = np.loadtxt(pred_path, skiprows=1)
        model = load_model(model_path)
        header, table = load_table(reg_csv)
        y = table[:, header.index("y")]
        rss = float(np.sum((y - preds) ** 2))
        assert rss == pytest.approx(
            sum(f.fit_stat for f in model.region_fits), abs=1e-8
        )

    def test_fit_deterministic_output(self, reg_csv, tmp_path):
        p1, p2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        for p in (p1, p2):
            assert (
                main(
                    [
                        "fit",
                        "--data",
                        reg_csv,
                        "--response",
                        "y",
                        "--task",
                        "regression",
                        "--seed",
                        "5",
                        "--out",
                        p,
                    ]
                )
                == 0
            )
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_non_convergence_exit_code_still_writes_model(
        self, reg_csv, tmp_path, capsys
    ):
        # max-iter 1 cannot satisfy the five-iteration stall rule
        model_path = str(tmp_path / "m.json")
        code = main(
            [
                "fit",
                "--data",
                reg_csv,
                "--response",
                "y",
                "--task",
                "regression",
                "--max-iter",
                "1",
                "--seed",
                "2",
                "--out",
                model_path,
            ]
        )
        assert code == 3
        assert os.path.exists(model_path)
        assert not load_model(model_path).converged
        assert "without converging" in capsys.readouterr().err

    def test_missing_column_exit_code(self, reg_csv, tmp_path, capsys):
        code = main(
            [
                "fit",
                "--data",
                reg_csv,
                "--response",
                "nope",
                "--task",
                "regression",
                "--out",
                str(tmp_path / "m.json"),
            ]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_non_binary_response_rejected(self, reg_csv, tmp_path, capsys):
        code = main(
            [
                "fit",
                "--data",
                reg_csv,
                "--response",
                "y",
                "--task",
                "logistic",
                "--out",
                str(tmp_path / "m.json"),
            ]
        )
        assert code == 2

    def test_logistic_predict_probability_half(self, tmp_path):
        # hand-built model: single region, empty coefficient vector -> t = 0
        doc = {
            "version": "partwise-v1",
            "task": "logistic",
            "n_obs": 10,
            "response": "y",
            "columns": ["x1"],
            "thresholds": {},
            "region_fits": [
                {"mask": [False, False], "beta": [], "fit_stat": 1.0,
                 "stabilized": False}
            ],
            "mdl": {
                "predictor_code": 0.0,
                "per_predictor_code": 0.0,
                "region_param_code": 0.0,
                "residual_code": 0.0,
                "total": 0.0,
            },
            "sigma2_hat": None,
            "converged": True,
        }
        mp = tmp_path / "m.json"
        mp.write_text(dumps_document(doc))
        dp = tmp_path / "d.csv"
        write_csv(dp, ["x1"], [[0.3], [99.0], [-99.0]])
        out = tmp_path / "p.csv"
        assert main(["predict", "--model", str(mp), "--data", str(dp), "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "probability,label"
        for line in lines[1:]:
            p, lab = line.split(",")
            assert float(p) == 0.5
            assert lab == "1"

    def test_simulate_smoke(self, capsys):
        code = main(
            [
                "simulate",
                "--setting",
                "reg1",
                "--n",
                "120",
                "--sigma",
                "0",
                "--trials",
                "1",
                "--seed",
                "3",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "pct_correct_BL" in out
        lines = [l for l in out.splitlines() if l]
        # exact recovery row under zero noise
        summary = dict(zip(lines[-2].split(","), lines[-1].split(",")))
        assert summary["pct_correct_BL"] == "1.0000"
        assert float(summary["cp_x1_1_mean"]) == 0.0

    def test_sigma_rejected_for_classification(self, capsys):
        code = main(
            ["simulate", "--setting", "cls2", "--sigma", "1", "--trials", "1"]
        )
        assert code == 2

    def test_threads_env_fallback(self, monkeypatch):
        from partwise.cli import _threads

        monkeypatch.setenv("PARTWISE_THREADS", "3")
        assert _threads(None) == 3
        assert _threads(2) == 2
        monkeypatch.delenv("PARTWISE_THREADS")
        assert _threads(None) == 1
