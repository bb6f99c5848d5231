"""End-to-end tests of the command-line front end (in-process)."""
import json
import math

import numpy as np
import pytest

from ddlab import Distribution, LossMatrix, Problem, save_scenario
from ddlab.cli import main

PREDICT_COIN_EXPECTED = """\
schema_version,decision,predictor,value,a_T,condition_ok,worst_case
1,0,saa,0.5,2.0,,
1,0,robust,0.5,2.0,,1.0;0.0
1,0,kl(r=0.1),0.5,2.0,,0.5;0.5
1,0,svp,0.5,2.0,true,
1,1,saa,0.5,2.0,,
1,1,robust,1.0,2.0,,0.0;1.0
1,1,kl(r=0.1),0.712878631455824,2.0,,0.287121368544176;0.7128786314558241
1,1,svp,0.6,2.0,true,0.4;0.6
"""

PRESCRIBE_COIN_EXPECTED = """\
schema_version,predictor,decision,value,gap_lower,gap_upper,a_T
1,saa,0,0.5,,,2.0
1,robust,0,0.5,,,2.0
1,kl(r=0.1),0,0.5,,,2.0
1,svp,0,0.5,0.0,0.0,2.0
"""

CONVEXITY_EXPECTED = """\
schema_version,ratio,a_T,threshold_ok,midpoint_violations
1,2.0,10.0,false,419
1,0.5,2.5,false,225
1,0.02,0.1,false,0
1,0.0005,0.0025,true,0
"""


def write_coin(tmp_path, true_dist=(0.5, 0.5)):
    loss = LossMatrix(
        np.array([[0.5, 0.5], [0.0, 1.0]]),
        decision_labels=("safe", "risky"),
        scenario_labels=("tails", "heads"),
    )
    td = None if true_dist is None else Distribution(true_dist)
    path = tmp_path / "coin.json"
    save_scenario(Problem(loss, td), str(path))
    return str(path)


def write_grid(tmp_path):
    xs = np.linspace(-3.0, 3.0, 101)
    xi = np.arange(-2.0, 3.0)
    loss = LossMatrix(np.abs(xs[:, None] - xi[None, :]))
    path = tmp_path / "grid.json"
    save_scenario(Problem(loss), str(path))
    return str(path)


def write_config(tmp_path, name, doc):
    body = {"schema_version": 1}
    body.update(doc)
    path = tmp_path / name
    path.write_text(json.dumps(body), encoding="utf-8")
    return str(path)


def predict_coin_config(tmp_path, **extra):
    doc = {
        "scenario": write_coin(tmp_path),
        "counts": [50, 50],
        "schedule": {"kind": "exponential", "rate": 0.02},
        "predictors": [
            {"kind": "saa"},
            {"kind": "robust"},
            {"kind": "kl", "radius": 0.1},
            {"kind": "svp"},
        ],
        "format": "csv",
    }
    doc.update(extra)
    return write_config(tmp_path, "predict.json", doc)


class TestPredict:
    def test_csv_table(self, tmp_path, capsys):
        rc = main(["predict", "--config", predict_coin_config(tmp_path)])
        captured = capsys.readouterr()
        assert rc == 0
        assert captured.err == ""
        assert captured.out == PREDICT_COIN_EXPECTED

    def test_json_mirrors_csv_rows(self, tmp_path, capsys):
        rc = main(
            ["predict", "--config", predict_coin_config(tmp_path), "--format", "json"]
        )
        out = capsys.readouterr().out
        assert rc == 0
        rows = json.loads(out)
        assert len(rows) == 8
        assert list(rows[0].keys()) == [
            "schema_version", "decision", "predictor", "value", "a_T",
            "condition_ok", "worst_case",
        ]
        svp_risky = rows[-1]
        assert svp_risky["predictor"] == "svp"
        assert svp_risky["value"] == 0.6
        assert svp_risky["condition_ok"] is True
        assert svp_risky["worst_case"] == [0.4, 0.6]
        robust_safe = rows[1]
        assert robust_safe["worst_case"] == [1.0, 0.0]
        assert robust_safe["condition_ok"] is None

    def test_out_file_and_rerun_identical(self, tmp_path, capsys):
        cfg = predict_coin_config(tmp_path)
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main(["predict", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["predict", "--config", cfg, "--out", str(out2)]) == 0
        blob = out1.read_bytes()
        assert blob == out2.read_bytes()
        assert blob == PREDICT_COIN_EXPECTED.encode()
        assert b"\r" not in blob
        assert capsys.readouterr().out == ""

    def test_missing_counts(self, tmp_path, capsys):
        cfg = predict_coin_config(tmp_path)
        doc = json.loads(open(cfg).read())
        del doc["counts"]
        cfg2 = write_config(tmp_path, "nocounts.json", doc)
        rc = main(["predict", "--config", cfg2])
        err = capsys.readouterr().err
        assert rc == 2
        record = json.loads(err)
        assert record["exit_code"] == 2
        assert "counts" in record["message"]

    def test_malformed_scenario(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        cfg = predict_coin_config(tmp_path, scenario=str(bad))
        rc = main(["predict", "--config", cfg])
        err = capsys.readouterr().err
        assert rc == 2
        record = json.loads(err)
        assert record["error"] == "ScenarioFormatError"
        assert record["line"] == 1

    def test_wrong_scenario_schema_version(self, tmp_path, capsys):
        coin = json.loads(open(write_coin(tmp_path)).read())
        coin["schema_version"] = 99
        bad = tmp_path / "v99.json"
        bad.write_text(json.dumps(coin), encoding="utf-8")
        cfg = predict_coin_config(tmp_path, scenario=str(bad))
        rc = main(["predict", "--config", cfg])
        record = json.loads(capsys.readouterr().err)
        assert rc == 2
        assert record["field"] == "schema_version"

    def test_unknown_schedule_kind(self, tmp_path, capsys):
        cfg = predict_coin_config(tmp_path, schedule={"kind": "geometric"})
        assert main(["predict", "--config", cfg]) == 2
        capsys.readouterr()

    def test_bad_format_value(self, tmp_path, capsys):
        cfg = predict_coin_config(tmp_path, format="tsv")
        assert main(["predict", "--config", cfg]) == 2
        capsys.readouterr()


class TestPrescribe:
    def test_csv_table(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "prescribe.json",
            {
                "scenario": write_coin(tmp_path),
                "counts": [50, 50],
                "schedule": {"kind": "exponential", "rate": 0.02},
                "predictors": [
                    {"kind": "saa"},
                    {"kind": "robust"},
                    {"kind": "kl", "radius": 0.1},
                    {"kind": "svp"},
                ],
            },
        )
        rc = main(["prescribe", "--config", cfg])
        out = capsys.readouterr().out
        assert rc == 0
        assert out == PRESCRIBE_COIN_EXPECTED

    def test_kl_zero_radius_matches_saa(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "klzero.json",
            {
                "scenario": write_coin(tmp_path),
                "counts": [30, 70],
                "predictors": [{"kind": "kl", "radius": 0.0}, {"kind": "saa"}],
            },
        )
        rc = main(["prescribe", "--config", cfg])
        out = capsys.readouterr().out
        assert rc == 0
        lines = out.strip().splitlines()
        kl_decision = lines[1].split(",")[2]
        saa_decision = lines[2].split(",")[2]
        assert kl_decision == saa_decision == "0"

    def test_robust_prescription_ignores_counts(self, tmp_path, capsys):
        decisions = []
        for counts in ([90, 10], [5, 45]):
            cfg = write_config(
                tmp_path,
                "robust%d.json" % counts[0],
                {
                    "scenario": write_coin(tmp_path),
                    "counts": counts,
                    "predictors": [{"kind": "robust"}],
                },
            )
            assert main(["prescribe", "--config", cfg]) == 0
            out = capsys.readouterr().out
            decisions.append(out.strip().splitlines()[1].split(",")[2])
        assert decisions[0] == decisions[1]


class TestDisappoint:
    def base_config(self, tmp_path, **extra):
        doc = {
            "scenario": write_coin(tmp_path),
            "mode": {"kind": "prediction", "decision": 1},
            "T_list": [2],
            "schedule": {"kind": "exponential", "rate": 0.1},
            "predictors": [{"kind": "saa"}, {"kind": "robust"}],
            "method": "exact",
        }
        doc.update(extra)
        return write_config(tmp_path, "disappoint.json", doc)

    def test_exact_hand_rows(self, tmp_path, capsys):
        rc = main(["disappoint", "--config", self.base_config(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        lines = out.strip().splitlines()
        assert lines[0] == (
            "schema_version,T,a_T,predictor,probability,rate,method,std_err"
        )
        saa = lines[1].split(",")
        assert saa[1] == "2" and saa[3] == "saa" and saa[6] == "exact"
        assert float(saa[4]) == pytest.approx(0.25, abs=1e-15)
        assert float(saa[5]) == pytest.approx(math.log(0.25) / 0.2, rel=1e-12)
        assert saa[7] == ""
        assert lines[2] == "1,2,0.2,robust,0.0,-inf,exact,"

    def test_rows_sorted_by_T(self, tmp_path, capsys):
        cfg = self.base_config(tmp_path, T_list=[10, 5])
        assert main(["disappoint", "--config", cfg]) == 0
        out = capsys.readouterr().out
        ts = [line.split(",")[1] for line in out.strip().splitlines()[1:]]
        assert ts == ["5", "5", "10", "10"]

    def test_requires_true_dist(self, tmp_path, capsys):
        cfg = self.base_config(
            tmp_path, scenario=write_grid(tmp_path)
        )
        rc = main(["disappoint", "--config", cfg])
        record = json.loads(capsys.readouterr().err)
        assert rc == 2
        assert "true_dist" in record["message"]

    def test_stochastic_method_needs_seed(self, tmp_path, capsys):
        cfg = self.base_config(tmp_path, method="mc")
        assert main(["disappoint", "--config", cfg]) == 2
        capsys.readouterr()

    def test_seed_flag_overrides_config(self, tmp_path, capsys):
        cfg_seed1 = self.base_config(tmp_path, method="mc", seed=1, n_samples=5000)
        assert main(["disappoint", "--config", cfg_seed1, "--seed", "99"]) == 0
        flagged = capsys.readouterr().out
        cfg_seed99 = self.base_config(tmp_path, method="mc", seed=99, n_samples=5000)
        assert main(["disappoint", "--config", cfg_seed99]) == 0
        direct = capsys.readouterr().out
        assert flagged == direct

    def test_mc_rerun_byte_identical(self, tmp_path):
        cfg = self.base_config(
            tmp_path, method="mc", seed=42, n_samples=20000, T_list=[6]
        )
        out1 = tmp_path / "r1.csv"
        out2 = tmp_path / "r2.csv"
        assert main(["disappoint", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["disappoint", "--config", cfg, "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_json_rerun_byte_identical(self, tmp_path):
        cfg = self.base_config(
            tmp_path, method="importance", seed=8, n_samples=10000,
            format="json", shift=[0.7, 0.3],
        )
        out1 = tmp_path / "r1.json"
        out2 = tmp_path / "r2.json"
        assert main(["disappoint", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["disappoint", "--config", cfg, "--out", str(out2)]) == 0
        blob = out1.read_bytes()
        assert blob == out2.read_bytes()
        rows = json.loads(blob)
        assert rows[1]["rate"] == "-inf"  # robust row, serialized sentinel
        saa = rows[0]
        assert saa["method"] == "importance"
        sigma = max(float(saa["std_err"]), math.sqrt(0.25 * 0.75 / 10000))
        assert abs(saa["probability"] - 0.25) <= 4.0 * sigma

    def test_tiny_cap_is_a_runtime_error(self, tmp_path, capsys):
        cfg = self.base_config(tmp_path, T_list=[100])
        rc = main(["disappoint", "--config", cfg, "--cap", "10"])
        record = json.loads(capsys.readouterr().err)
        assert rc == 1
        assert record["error"] == "LatticeCapError"
        assert record["size"] == 101
        assert record["cap"] == 10
        assert record["exit_code"] == 1

    def test_method_flag_overrides_config(self, tmp_path, capsys):
        cfg = self.base_config(tmp_path, method="exact")
        rc = main(
            ["disappoint", "--config", cfg, "--method", "mc", "--seed", "3"]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "monte_carlo" in out


class TestConvexity:
    def test_grid_sweep_frozen_table(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "convexity.json",
            {
                "scenario": write_grid(tmp_path),
                "counts": [1, 1, 1, 1, 1],
                "ratios": [2.0, 0.5, 0.02, 0.0005],
            },
        )
        rc = main(["convexity", "--config", cfg])
        out = capsys.readouterr().out
        assert rc == 0
        assert out == CONVEXITY_EXPECTED

    def test_empty_ratios(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "empty.json",
            {
                "scenario": write_grid(tmp_path),
                "counts": [1, 1, 1, 1, 1],
                "ratios": [],
            },
        )
        assert main(["convexity", "--config", cfg]) == 2
        capsys.readouterr()

    def test_nonpositive_ratio(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "negratio.json",
            {
                "scenario": write_grid(tmp_path),
                "counts": [1, 1, 1, 1, 1],
                "ratios": [0.5, -1.0],
            },
        )
        assert main(["convexity", "--config", cfg]) == 2
        capsys.readouterr()


class TestConfigPlumbing:
    def test_scenario_flag_without_config(self, tmp_path, capsys):
        # flags alone are a complete configuration for predict
        scenario = write_coin(tmp_path)
        rc = main(["predict", "--scenario", scenario])
        out = capsys.readouterr()
        # counts are still required, so this is an input error
        assert rc == 2

    def test_config_must_be_versioned(self, tmp_path, capsys):
        path = tmp_path / "unversioned.json"
        path.write_text(json.dumps({"scenario": "x"}), encoding="utf-8")
        assert main(["predict", "--config", str(path)]) == 2
        capsys.readouterr()

    def test_config_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("[1,", encoding="utf-8")
        assert main(["predict", "--config", str(path)]) == 2
        capsys.readouterr()
