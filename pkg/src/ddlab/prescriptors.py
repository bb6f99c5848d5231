"""From predictors to decisions.

A prescriptor minimizes a predictor over the finite decision set.  This
module also provides the two desk-scale certificates attached to the
variance-penalized prescriptor: the gap sandwich pinning its optimal value
to the true optimum, and the grid convexity check for 1-D decision
families.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .decisions import LossMatrix, Problem
from .errors import ValidationError
from .predictors import (
    PredictorSpec,
    RegimeSchedule,
    dro_condition_holds,
    predictor_value_matrix,
    speed_ratio,
    variance_matrix,
)
from .simplex import Distribution, EmpiricalDistribution

VALUE_TIE_TOL = 1e-12


@dataclass(frozen=True)
class PrescriptionResult:
    decision: int
    value: float
    predictor_kind: str
    gap_lower: Optional[float] = None
    gap_upper: Optional[float] = None


def select_decisions(values: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Row-wise argmin with the prescriptor tie-break.

    values, variances: (N, n_decisions).  Within each row, decisions whose
    value is within VALUE_TIE_TOL of the row minimum are candidates; among
    candidates the smallest variance wins; remaining ties go to the lowest
    index.  Returns (N,) int indices.
    """
    values = np.asarray(values, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if values.shape != variances.shape or values.ndim != 2:
        raise ValidationError("values and variances must share shape (N, n)")
    vmin = values.min(axis=1, keepdims=True)
    cand = values <= vmin + VALUE_TIE_TOL
    masked_var = np.where(cand, variances, np.inf)
    wmin = masked_var.min(axis=1, keepdims=True)
    # argmax returns the first index where the winning mask is True
    pick = np.argmax(cand & (masked_var == wmin), axis=1)
    return pick.astype(np.int64)


def _resolved_spec(spec: PredictorSpec, schedule: Optional[RegimeSchedule]) -> PredictorSpec:
    if spec.kind == "kl" and spec.radius is None:
        return PredictorSpec("kl", spec.resolve_radius(schedule))
    return spec


def prescribe(
    problem: Problem,
    spec: PredictorSpec,
    emp: EmpiricalDistribution,
    schedule: Optional[RegimeSchedule] = None,
    kl_tol: float = 1e-10,
) -> PrescriptionResult:
    """Minimize the chosen predictor over all decisions.

    Ties within 1e-12 of the minimal value go to the decision with the
    smaller loss variance under emp, then to the lowest index.  For the
    variance-penalized predictor on an interior empirical distribution the
    result carries the gap sandwich of prescription_gap_bound.
    """
    spec = _resolved_spec(spec, schedule)
    if spec.kind == "svp" and schedule is None:
        raise ValidationError("svp prescription needs a schedule")
    T = emp.sample_size
    ratio = speed_ratio(schedule, T) if schedule is not None else None
    p = emp.distribution
    W = p.weights[None, :]
    values = predictor_value_matrix(problem, spec, W, ratio=ratio, kl_tol=kl_tol)
    variances = variance_matrix(problem, W)
    pick = int(select_decisions(values, variances)[0])
    value = float(values[0, pick])
    gap_lower = gap_upper = None
    if spec.kind == "svp" and p.is_interior:
        gap_lower, gap_upper = prescription_gap_bound(problem, p, T, schedule)
    return PrescriptionResult(
        decision=pick,
        value=value,
        predictor_kind=spec.label,
        gap_lower=gap_lower,
        gap_upper=gap_upper,
    )


def prescription_gap_bound(
    problem: Problem, p: Distribution, T: int, schedule: RegimeSchedule
) -> Tuple[float, float]:
    """Sandwich for the variance-penalized optimal value at p.

    With ratio = a_T/T, the optimal penalized value c*_V exceeds the true
    optimum c* by at least sqrt(2*ratio*Var(picked decision)) and at most
    sqrt(2*ratio*Var(cost minimizer)); both sides use the same 2*a_T/T
    scaling.  The sandwich is re-checked numerically on every call.
    """
    if not p.is_interior:
        raise ValidationError("gap bound needs an interior distribution")
    ratio = speed_ratio(schedule, T)
    W = p.weights[None, :]
    values = predictor_value_matrix(problem, PredictorSpec("svp"), W, ratio=ratio)
    variances = variance_matrix(problem, W)
    costs = predictor_value_matrix(problem, PredictorSpec("saa"), W)
    pick = int(select_decisions(values, variances)[0])
    x_star = int(np.argmin(costs[0]))
    lower = math.sqrt(2.0 * ratio * float(variances[0, pick]))
    upper = math.sqrt(2.0 * ratio * float(variances[0, x_star]))
    gap = float(values[0].min()) - float(costs[0].min())
    if not (lower - 1e-12 <= gap <= upper + 1e-12):
        raise RuntimeError(
            "gap sandwich violated: %r <= %r <= %r" % (lower, gap, upper)
        )
    return lower, upper


def convexity_certificate(
    loss: LossMatrix,
    emp: EmpiricalDistribution,
    schedule: RegimeSchedule,
) -> Tuple[bool, int]:
    """Convexity diagnostics for a 1-D decision grid.

    threshold_ok reports the interiority condition under which the
    variance-penalized objective is convex whenever the underlying loss
    family is.  midpoint_violations counts grid triples (i, (i+k)/2, k)
    with even spacing whose penalized value at the midpoint exceeds the
    chord by more than 1e-9; only exact grid midpoints are tested, since a
    rounded midpoint falsely flags piecewise-linear segments.
    """
    if loss.n_decisions < 3:
        raise ValidationError("decision grid too small: need >= 3 points")
    problem = Problem(loss)
    T = emp.sample_size
    ratio = speed_ratio(schedule, T)
    p = emp.distribution
    threshold_ok = dro_condition_holds(p, ratio)
    W = p.weights[None, :]
    v = predictor_value_matrix(problem, PredictorSpec("svp"), W, ratio=ratio)[0]
    n = v.size
    violations = 0
    for i in range(n - 2):
        for k in range(i + 2, n, 2):
            mid = (i + k) // 2
            if v[mid] > 0.5 * (v[i] + v[k]) + 1e-9:
                violations += 1
    return threshold_ok, int(violations)
