import json
import math

import numpy as np
import pytest

from ddlab import (
    Distribution,
    LossMatrix,
    Problem,
    ScenarioFormatError,
    ValidationError,
    cost,
    covariance,
    load_scenario,
    min_variance_minimizer,
    save_scenario,
    variance,
)


class TestLossMatrix:
    def test_basic_shape(self):
        m = LossMatrix([[0.0, 1.0], [0.5, 0.5]])
        assert m.n_decisions == 2
        assert m.n_scenarios == 2

    def test_rejects_nonfinite_and_names_cell(self):
        with pytest.raises(ValidationError) as exc:
            LossMatrix([[0.0, math.nan], [0.5, 0.5]])
        msg = str(exc.value)
        assert "0" in msg and "1" in msg

    def test_rejects_single_scenario(self):
        with pytest.raises(ValidationError):
            LossMatrix([[1.0], [2.0]])

    def test_default_labels(self):
        m = LossMatrix([[0.0, 1.0]])
        assert m.decision_labels == ("x0",)
        assert m.scenario_labels == ("s0", "s1")

    def test_label_length_checked(self):
        with pytest.raises(ValidationError):
            LossMatrix([[0.0, 1.0]], decision_labels=["a", "b"])

    def test_k_half_is_max_abs(self):
        m = LossMatrix([[-3.0, 1.0], [0.5, 2.0]])
        assert m.k_half == 3.0


class TestCostAndVariance:
    def setup_method(self):
        self.problem = Problem(LossMatrix([[0.0, 1.0], [0.5, 0.5]]))
        self.p = Distribution([0.25, 0.75])

    def test_cost_linear(self):
        assert cost(self.problem, 0, self.p) == 0.75
        assert cost(self.problem, 1, self.p) == 0.5

    def test_variance_bernoulli(self):
        assert abs(variance(self.problem, 0, self.p) - 0.1875) <= 1e-15

    def test_variance_constant_row_is_zero(self):
        assert variance(self.problem, 1, self.p) == 0.0

    def test_variance_never_negative(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            row = rng.uniform(-1, 1, size=3)
            prob = Problem(LossMatrix([row]))
            p = Distribution(rng.dirichlet([1.0, 1.0, 1.0]))
            assert variance(prob, 0, p) >= 0.0

    def test_covariance_hand(self):
        prob = Problem(LossMatrix([[0.0, 1.0], [1.0, 0.0]]))
        p = Distribution([0.5, 0.5])
        assert abs(covariance(prob, 0, 1, p) + 0.25) <= 1e-15

    def test_decision_index_checked(self):
        with pytest.raises(IndexError):
            cost(self.problem, 5, self.p)

    def test_dimension_checked(self):
        with pytest.raises(ValidationError):
            cost(self.problem, 0, Distribution([0.2, 0.3, 0.5]))


class TestMinVarianceMinimizer:
    def test_tie_prefers_lower_variance(self):
        prob = Problem(LossMatrix([[0.5, 0.5], [0.0, 1.0]]))
        assert min_variance_minimizer(prob, Distribution([0.5, 0.5])) == 0

    def test_strict_minimum_wins(self):
        prob = Problem(LossMatrix([[0.4, 0.4], [0.0, 1.0]]))
        assert min_variance_minimizer(prob, Distribution([0.5, 0.5])) == 0
        prob2 = Problem(LossMatrix([[0.6, 0.6], [0.0, 1.0]]))
        assert min_variance_minimizer(prob2, Distribution([0.5, 0.5])) == 1

    def test_bad_tol(self):
        prob = Problem(LossMatrix([[0.5, 0.5]]))
        with pytest.raises(ValidationError):
            min_variance_minimizer(prob, Distribution([0.5, 0.5]), tol=0.0)


class TestProblem:
    def test_true_dist_dimension_checked(self):
        with pytest.raises(ValidationError):
            Problem(LossMatrix([[0.0, 1.0]]), true_dist=Distribution([1 / 3] * 3))


class TestScenarioIO:
    def test_roundtrip_exact(self, tmp_path):
        path = tmp_path / "s.json"
        prob = Problem(
            LossMatrix(
                [[0.1, 0.9], [1 / 3, 2 / 3]],
                decision_labels=["a", "b"],
                scenario_labels=["lo", "hi"],
            ),
            true_dist=Distribution([0.25, 0.75]),
        )
        save_scenario(prob, str(path))
        back = load_scenario(str(path))
        assert np.array_equal(back.loss.values, prob.loss.values)
        assert back.loss.decision_labels == ("a", "b")
        assert back.loss.scenario_labels == ("lo", "hi")
        assert back.true_dist == prob.true_dist

    def test_roundtrip_without_true_dist(self, tmp_path):
        path = tmp_path / "s.json"
        save_scenario(Problem(LossMatrix([[0.0, 1.0]])), str(path))
        assert load_scenario(str(path)).true_dist is None

    def test_malformed_json_reports_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{ not json", encoding="utf-8")
        with pytest.raises(ScenarioFormatError) as exc:
            load_scenario(str(path))
        assert "line" in str(exc.value)

    def test_wrong_schema_version(self, tmp_path):
        path = tmp_path / "v.json"
        path.write_text(json.dumps({"schema_version": 99}), encoding="utf-8")
        with pytest.raises(ScenarioFormatError) as exc:
            load_scenario(str(path))
        assert exc.value.field == "schema_version"

    def test_missing_field_named(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(
            json.dumps({"schema_version": 1, "scenario_labels": ["a", "b"]}),
            encoding="utf-8",
        )
        with pytest.raises(ScenarioFormatError) as exc:
            load_scenario(str(path))
        assert exc.value.field is not None

    def test_ragged_loss_rejected(self, tmp_path):
        path = tmp_path / "r.json"
        doc = {
            "schema_version": 1,
            "scenario_labels": ["a", "b"],
            "decision_labels": ["x"],
            "loss": [[0.0, 1.0, 2.0]],
            "true_dist": None,
        }
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(ScenarioFormatError):
            load_scenario(str(path))
