"""Finite decision problems: loss matrices, moments, and scenario files.

A problem is a finite set of decisions (rows) against a finite set of
scenarios (columns).  The expected cost of a decision under a distribution,
its variance and covariances, and the minimal-variance cost minimizer are
the primitives every predictor and prescriptor builds on.
"""
from __future__ import annotations

import json
from typing import Optional, Sequence

import numpy as np

from .errors import ScenarioFormatError, ValidationError
from .simplex import Distribution

SCHEMA_VERSION = 1


class LossMatrix:
    """Losses l(x, i): rows are decisions, columns are scenarios."""

    __slots__ = ("values", "decision_labels", "scenario_labels", "k_half")

    def __init__(
        self,
        values,
        decision_labels: Optional[Sequence[str]] = None,
        scenario_labels: Optional[Sequence[str]] = None,
    ) -> None:
        v = np.asarray(values, dtype=float)
        if v.ndim != 2:
            raise ValidationError("loss matrix must be 2-D")
        n, d = v.shape
        if n < 1 or d < 2:
            raise ValidationError("need at least 1 decision and 2 scenarios")
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise ValidationError(
                "non-finite loss at decision %d, scenario %d" % (bad[0], bad[1])
            )
        if decision_labels is None:
            decision_labels = ["x%d" % i for i in range(n)]
        if scenario_labels is None:
            scenario_labels = ["s%d" % i for i in range(d)]
        if len(decision_labels) != n:
            raise ValidationError("decision_labels length mismatch")
        if len(scenario_labels) != d:
            raise ValidationError("scenario_labels length mismatch")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "decision_labels", tuple(decision_labels))
        object.__setattr__(self, "scenario_labels", tuple(scenario_labels))
        # cached sup-norm; the two-sided bound used by finite-sample
        # guarantees is K = 2 * k_half
        object.__setattr__(self, "k_half", float(np.abs(v).max()))

    def __setattr__(self, name, value):
        raise AttributeError("LossMatrix is immutable")

    @property
    def n_decisions(self) -> int:
        return self.values.shape[0]

    @property
    def n_scenarios(self) -> int:
        return self.values.shape[1]


class Problem:
    """A loss matrix plus, in experiment mode, the true distribution."""

    __slots__ = ("loss", "true_dist")

    def __init__(self, loss: LossMatrix, true_dist: Optional[Distribution] = None):
        if true_dist is not None and true_dist.dim != loss.n_scenarios:
            raise ValidationError(
                "true_dist has %d weights for %d scenarios"
                % (true_dist.dim, loss.n_scenarios)
            )
        object.__setattr__(self, "loss", loss)
        object.__setattr__(self, "true_dist", true_dist)

    def __setattr__(self, name, value):
        raise AttributeError("Problem is immutable")

    @property
    def n_decisions(self) -> int:
        return self.loss.n_decisions

    @property
    def n_scenarios(self) -> int:
        return self.loss.n_scenarios


def _check_decision(problem: Problem, x: int) -> int:
    x = int(x)
    if not 0 <= x < problem.n_decisions:
        raise IndexError("decision index %d out of range" % x)
    return x


def cost(problem: Problem, x: int, p: Distribution) -> float:
    """Expected loss of decision x under p; linear in p."""
    x = _check_decision(problem, x)
    if p.dim != problem.n_scenarios:
        raise ValidationError("dimension mismatch")
    return float(problem.loss.values[x] @ p.weights)


def variance(problem: Problem, x: int, p: Distribution) -> float:
    """Variance of the loss of decision x under p, clamped at 0.

    The raw E[l^2] - (E[l])^2 can land a hair below zero in floats and
    downstream code takes square roots of it.
    """
    x = _check_decision(problem, x)
    row = problem.loss.values[x]
    m = float(row @ p.weights)
    return max(float((row * row) @ p.weights) - m * m, 0.0)


def covariance(problem: Problem, x1: int, x2: int, p: Distribution) -> float:
    """Covariance of the losses of two decisions under p."""
    x1 = _check_decision(problem, x1)
    x2 = _check_decision(problem, x2)
    r1 = problem.loss.values[x1]
    r2 = problem.loss.values[x2]
    return float((r1 * r2) @ p.weights) - float(r1 @ p.weights) * float(
        r2 @ p.weights
    )


def min_variance_minimizer(
    problem: Problem, p: Distribution, tol: Optional[float] = None
) -> int:
    """Among decisions whose cost is within tol of the minimum, the one
    with the smallest variance; ties broken by lowest index."""
    costs = problem.loss.values @ p.weights
    c_star = float(costs.min())
    if tol is None:
        tol = 1e-9 * (1.0 + abs(c_star))
    elif tol <= 0:
        raise ValidationError("tol must be > 0")
    candidates = np.flatnonzero(costs <= c_star + tol)
    variances = np.array([variance(problem, int(x), p) for x in candidates])
    return int(candidates[int(np.argmin(variances))])


def _problem_from_dict(doc: dict, where: str) -> Problem:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("%s: top level must be an object" % where)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioFormatError(
            "%s: schema_version must be %d, got %r" % (where, SCHEMA_VERSION, version),
            field="schema_version",
        )
    for key in ("scenario_labels", "decision_labels", "loss"):
        if key not in doc:
            raise ScenarioFormatError("%s: missing field %r" % (where, key), field=key)
    loss_rows = doc["loss"]
    if not isinstance(loss_rows, list) or not all(
        isinstance(r, list) for r in loss_rows
    ):
        raise ScenarioFormatError(
            "%s: loss must be a row-major list of lists" % where, field="loss"
        )
    try:
        loss = LossMatrix(
            np.array(loss_rows, dtype=float),
            decision_labels=doc["decision_labels"],
            scenario_labels=doc["scenario_labels"],
        )
    except (ValidationError, ValueError) as exc:
        raise ScenarioFormatError("%s: %s" % (where, exc), field="loss") from exc
    true_dist = None
    if doc.get("true_dist") is not None:
        try:
            true_dist = Distribution(doc["true_dist"])
        except ValidationError as exc:
            raise ScenarioFormatError(
                "%s: true_dist invalid: %s" % (where, exc), field="true_dist"
            ) from exc
    try:
        return Problem(loss, true_dist)
    except ValidationError as exc:
        raise ScenarioFormatError("%s: %s" % (where, exc)) from exc


def load_scenario(path: str) -> Problem:
    """Load and validate a scenario JSON file.

    Schema (version 1): an object with `schema_version`, `scenario_labels`,
    `decision_labels`, `loss` (row-major, decisions x scenarios), and an
    optional `true_dist` over the scenarios.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioFormatError("cannot read %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(
            "%s: parse error at line %d column %d: %s"
            % (path, exc.lineno, exc.colno, exc.msg),
            line=exc.lineno,
        ) from exc
    return _problem_from_dict(doc, path)


def save_scenario(problem: Problem, path: str) -> None:
    """Write a problem to the scenario JSON format (inverse of load_scenario)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "scenario_labels": list(problem.loss.scenario_labels),
        "decision_labels": list(problem.loss.decision_labels),
        "loss": [[float(v) for v in row] for row in problem.loss.values],
        "true_dist": None
        if problem.true_dist is None
        else [float(w) for w in problem.true_dist.weights],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
