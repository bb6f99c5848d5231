"""Cost predictors over finite scenario sets.

Four predictors of the out-of-sample cost of a fixed decision:

* plug-in (SAA): the empirical expected loss;
* robust: the worst scenario loss, data-free;
* KL ball: the worst expected loss over all distributions within relative
  entropy r of the empirical one, computed through its 1-D convex dual;
* variance-penalized (SVP): empirical cost plus sqrt(2 a_T/T * variance),
  which under an interiority condition equals the worst expected loss over
  a local ellipsoid around the empirical distribution.

Also here: the guarantee-speed schedules a_T, the exact maximizer of a
linear function over ellipsoid-intersect-simplex, and the worst-case
distribution attaining the SVP value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .decisions import Problem, cost, variance, _check_decision
from .errors import (
    ConvergenceError,
    EllipsoidConditionError,
    ValidationError,
)
from .simplex import Distribution, EmpiricalDistribution

# ---------------------------------------------------------------------------
# guarantee-speed schedules


@dataclass(frozen=True)
class ExponentialRate:
    """a_T = rate * T; the regime where the KL predictor is the right tool."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValidationError("rate must be > 0")

    def a(self, T: int) -> float:
        return self.rate * T


@dataclass(frozen=True)
class PowerLaw:
    """a_T = coeff * T**exponent with 0 < exponent < 1, so a_T/T -> 0."""

    coeff: float
    exponent: float

    def __post_init__(self):
        if not self.coeff > 0:
            raise ValidationError("coeff must be > 0")
        if not 0 < self.exponent < 1:
            raise ValidationError("exponent must lie in (0, 1)")

    def a(self, T: int) -> float:
        return self.coeff * float(T) ** self.exponent


@dataclass(frozen=True)
class Logarithmic:
    """a_T = coeff * log(1 + T); the 1+ keeps a_1 positive."""

    coeff: float

    def __post_init__(self):
        if not self.coeff > 0:
            raise ValidationError("coeff must be > 0")

    def a(self, T: int) -> float:
        return self.coeff * math.log1p(T)


@dataclass(frozen=True)
class CustomTable:
    """Explicit (T, a_T) pairs; must be positive and nondecreasing in T."""

    points: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        pts = tuple(sorted((int(t), float(a)) for t, a in self.points))
        if not pts:
            raise ValidationError("table must not be empty")
        last = 0.0
        for t, a in pts:
            if a <= 0:
                raise ValidationError("a_T must be > 0 (T=%d)" % t)
            if a < last:
                raise ValidationError("a_T must be nondecreasing (T=%d)" % t)
            last = a
        object.__setattr__(self, "points", pts)

    def a(self, T: int) -> float:
        for t, a in self.points:
            if t == T:
                return a
        raise ValidationError("no table entry for T=%d" % T)


RegimeSchedule = Union[ExponentialRate, PowerLaw, Logarithmic, CustomTable]


def speed_ratio(schedule: RegimeSchedule, T: int) -> float:
    """a_T / T for the given schedule."""
    return schedule.a(T) / T


# ---------------------------------------------------------------------------
# predictor choice, kind plus radius (used by prescriptors, the lab, and the CLI)

_KINDS = ("saa", "robust", "kl", "svp")


@dataclass(frozen=True)
class PredictorSpec:
    """Which predictor to run; `radius` is the KL ball radius.

    A KL spec without an explicit radius takes it from an ExponentialRate
    schedule (the matching guarantee speed a_T = r*T).
    """

    kind: str
    radius: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError("unknown predictor kind %r" % (self.kind,))
        if self.radius is not None and self.radius < 0:
            raise ValidationError("radius must be >= 0")

    def resolve_radius(self, schedule: Optional[RegimeSchedule]) -> float:
        if self.kind != "kl":
            raise ValidationError("only KL predictors carry a radius")
        if self.radius is not None:
            return self.radius
        if isinstance(schedule, ExponentialRate):
            return schedule.rate
        raise ValidationError(
            "KL predictor needs a radius: give one explicitly or use an "
            "ExponentialRate schedule"
        )

    @property
    def label(self) -> str:
        if self.kind == "kl" and self.radius is not None:
            return "kl(r=%s)" % repr(float(self.radius))
        return self.kind


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class PredictionResult:
    value: float
    worst_case: Optional[Distribution] = None
    dual_alpha: Optional[float] = None
    condition_ok: Optional[bool] = None


# ---------------------------------------------------------------------------
# plug-in and robust


def predict_saa(problem: Problem, x: int, emp: EmpiricalDistribution) -> PredictionResult:
    """Plug-in predictor: expected loss under the empirical distribution."""
    return PredictionResult(value=cost(problem, x, emp.distribution))


def predict_robust(problem: Problem, x: int) -> PredictionResult:
    """Worst-scenario predictor; ignores data entirely."""
    x = _check_decision(problem, x)
    row = problem.loss.values[x]
    i = int(np.argmax(row))  # lowest index on ties
    vertex = np.zeros(row.size)
    vertex[i] = 1.0
    return PredictionResult(value=float(row[i]), worst_case=Distribution(vertex))


# ---------------------------------------------------------------------------
# KL-ball predictor (dual solve)


def _kl_dual_solve(
    row: np.ndarray, weights: np.ndarray, r: float, tol: float
) -> Tuple[float, float, np.ndarray]:
    """Minimize f(a) = a - exp(-r + sum_i w_i log(a - l_i)) over a >= max(l).

    Returns (value, alpha, worst_case_weights).  The geometric mean runs over
    the support of `weights` only (zero weights contribute exponent 0), but
    the constraint keeps the full-row maximum: the adversary may move mass
    onto scenarios the empirical distribution never saw.
    """
    gamma = float(row.max())
    span = float(row.max() - row.min())
    sup_mask = weights > 0.0
    ls = row[sup_mask]
    ws = weights[sup_mask]

    def S(a: float) -> float:
        return float(np.sum(ws * np.log(a - ls)))

    def g(a: float) -> float:  # f'(a)
        return 1.0 - math.exp(-r + S(a)) * float(np.sum(ws / (a - ls)))

    def gprime(a: float) -> float:
        D = float(np.sum(ws / (a - ls)))
        D2 = float(np.sum(ws / (a - ls) ** 2))
        return math.exp(-r + S(a)) * (D2 - D * D)

    lo = gamma + 1e-12 * span
    if g(lo) >= 0.0:
        # minimum pinned at the left edge: happens when the max-loss
        # scenario carries no empirical weight, or when r is huge
        alpha = lo
    else:
        hi = gamma + span
        doublings = 0
        while g(hi) < 0.0:
            hi = gamma + 2.0 * (hi - gamma)
            doublings += 1
            if doublings > 200:
                raise ConvergenceError(
                    "no sign change while expanding the dual bracket",
                    bracket=(lo, hi),
                )
        width_goal = max(tol, 1e-12 * (1.0 + abs(hi)))
        iters = 0
        while hi - lo > width_goal:
            mid = 0.5 * (lo + hi)
            if g(mid) < 0.0:
                lo = mid
            else:
                hi = mid
            iters += 1
            if iters > 300:
                raise ConvergenceError(
                    "dual bisection failed to reach width %r" % width_goal,
                    bracket=(lo, hi),
                )
        alpha = 0.5 * (lo + hi)
        for _ in range(5):  # Newton polish; g is increasing and smooth here
            gp = gprime(alpha)
            if gp <= 0.0:
                break
            step = g(alpha) / gp
            nxt = alpha - step
            if not lo <= nxt <= hi:
                break
            alpha = nxt

    gm = math.exp(-r + S(alpha))
    value = alpha - gm
    # alpha grows like sqrt(Var/r) for tiny r and the subtraction then loses
    # ulps; the true supremum always lies between the plug-in cost and gamma
    value = min(max(value, float(row @ weights)), gamma)
    # attaining distribution: q_i proportional to w_i/(alpha - l_i) on the
    # support; at an edge minimum the leftover mass sits on the worst scenario
    q = np.zeros(row.size)
    q[sup_mask] = gm * ws / (alpha - ls)
    residual = 1.0 - float(q.sum())
    if residual > 0.0:
        q[int(np.argmax(row))] += residual
    return value, alpha, q


def predict_kl_dual(
    problem: Problem, x: int, p: Distribution, r: float, tol: float = 1e-10
) -> PredictionResult:
    """Worst expected loss over the relative-entropy ball of radius r at p.

    The ball is {q : KL(p, q) <= r} with p (typically the empirical
    distribution) as the first argument.  Solved through the equivalent 1-D
    strictly convex dual; `tol` bounds the distance of the returned value
    from the true supremum.
    """
    x = _check_decision(problem, x)
    if r < 0:
        raise ValidationError("r must be >= 0")
    if tol <= 0:
        raise ValidationError("tol must be > 0")
    if p.dim != problem.n_scenarios:
        raise ValidationError("dimension mismatch")
    row = problem.loss.values[x]
    if r == 0.0:
        return PredictionResult(value=cost(problem, x, p), worst_case=p)
    if row.max() == row.min():
        # constant losses: every distribution gives the same cost
        return PredictionResult(
            value=float(row[0]), worst_case=p, dual_alpha=float(row[0])
        )
    value, alpha, q = _kl_dual_solve(row, p.weights, float(r), float(tol))
    return PredictionResult(
        value=value, worst_case=Distribution(q), dual_alpha=alpha
    )


def predict_kl_primal_grid(
    problem: Problem, x: int, p: Distribution, r: float, grid_step: float
) -> float:
    """Verification oracle: maximize cost over simplex grid points inside
    the KL ball (plus the exact center, so r=0 returns cost(x, p)).

    Exact maximum over the grid-point feasible set.  For d=3 the grid is
    scanned row by row: along a row the divergence is convex and the cost
    affine, so the feasible grid points form an interval whose endpoints
    are found by binary search and carry the row maximum.
    """
    x = _check_decision(problem, x)
    if grid_step <= 0:
        raise ValidationError("grid_step must be > 0")
    if r < 0:
        raise ValidationError("r must be >= 0")
    d = p.dim
    if d > 3:
        raise ValidationError("grid oracle supports d <= 3 only")
    row = problem.loss.values[x]
    best = cost(problem, x, p)  # center always feasible
    s = float(grid_step)
    K = int(math.floor(1.0 / s + 1e-9))
    w = p.weights

    def _terms(pi: float, qi: np.ndarray) -> np.ndarray:
        if pi == 0.0:
            return np.zeros_like(qi)
        with np.errstate(divide="ignore"):
            return np.where(qi > 0.0, pi * (np.log(pi) - np.log(qi)), np.inf)

    if d == 2:
        q1 = s * np.arange(K + 1)
        q2 = np.maximum(1.0 - q1, 0.0)
        div = _terms(w[0], q1) + _terms(w[1], q2)
        feas = div <= r
        if feas.any():
            vals = row[0] * q1[feas] + row[1] * q2[feas]
            best = max(best, float(vals.max()))
        return best

    # d == 3: rows indexed by q1; q2 on the grid, q3 the remainder
    q1 = s * np.arange(K + 1)
    rem = np.maximum(1.0 - q1, 0.0)
    K2 = np.floor(rem / s + 1e-9).astype(np.int64)
    t1 = _terms(w[0], q1)

    def row_div(rows: np.ndarray, k2: np.ndarray) -> np.ndarray:
        q2 = s * k2
        q3 = np.maximum(rem[rows] - q2, 0.0)
        return t1[rows] + _terms(w[1], q2) + _terms(w[2], q3)

    # grid point nearest the row-wise divergence minimizer
    frac = w[1] / (w[1] + w[2]) if (w[1] + w[2]) > 0 else 0.0
    k2c = np.clip(np.round(rem * frac / s).astype(np.int64), 0, K2)
    rows = np.arange(K + 1)
    dc = row_div(rows, k2c)
    for shift in (-1, 1):  # the convex minimum may sit one cell over
        k2s = np.clip(k2c + shift, 0, K2)
        ds = row_div(rows, k2s)
        better = ds < dc
        k2c = np.where(better, k2s, k2c)
        dc = np.where(better, ds, dc)
    alive = dc <= r
    if not alive.any():
        return best
    rows = rows[alive]
    k2c = k2c[alive]

    # smallest feasible k2 in [0, k2c]: divergence decreasing on this side
    lo = np.zeros(rows.size, dtype=np.int64)
    hi = k2c.copy()
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        ok = row_div(rows, mid) <= r
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid + 1)
    k2_low = lo
    # largest feasible k2 in [k2c, K2]
    lo = k2c.copy()
    hi = K2[rows]
    while np.any(lo < hi):
        mid = (lo + hi + 1) // 2
        ok = row_div(rows, mid) <= r
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid - 1)
    k2_high = lo

    for k2 in (k2_low, k2_high):
        q2 = s * k2
        q3 = np.maximum(rem[rows] - q2, 0.0)
        vals = row[0] * q1[rows] + row[1] * q2 + row[2] * q3
        best = max(best, float(vals.max()))
    return best


# ---------------------------------------------------------------------------
# variance-penalized predictor and its ellipsoid geometry


def dro_condition_holds(p: Distribution, ratio: float) -> bool:
    """Interiority condition under which the SVP value is an exact
    worst case over the local ellipsoid of radius ratio = a_T/T:
    sqrt(2*ratio) <= min_i p_i * min_i min(p_i, 1-p_i)."""
    if ratio < 0:
        raise ValidationError("ratio must be >= 0")
    w = p.weights
    rhs = float(w.min()) * float(np.minimum(w, 1.0 - w).min())
    return bool(math.sqrt(2.0 * ratio) <= rhs)


def svp_direction(problem: Problem, x: int, p: Distribution) -> np.ndarray:
    """The unit direction phi with p + sqrt(2 a_T/T) * phi attaining the
    SVP worst case: (l .* p - c(x,p) * p) / sqrt(Var).

    Returned as a raw zero-sum vector (a signed measure).  Satisfies
    2*||phi||_p^2 = 1 and sum_i l_i phi_i = sqrt(Var).  Requires Var > 0.
    """
    x = _check_decision(problem, x)
    row = problem.loss.values[x]
    c = cost(problem, x, p)
    var = variance(problem, x, p)
    if var <= 0.0:
        raise ValidationError("zero variance: direction undefined")
    return (row * p.weights - c * p.weights) / math.sqrt(var)


def svp_worst_case(
    problem: Problem, x: int, p: Distribution, ratio: float
) -> Distribution:
    """The distribution on the ellipsoid boundary ||q - p||_p^2 = ratio
    whose cost equals the SVP prediction.

    For a zero-variance row every feasible point has the same cost; the
    convention then walks toward the first vertex: q = p + sqrt(ratio) * v
    with v = sqrt(2 p_1/(1-p_1)) * (e_1 - p), which has ||v||_p^2 = 1.
    """
    x = _check_decision(problem, x)
    if not p.is_interior:
        raise ValidationError("worst case needs an interior distribution")
    if ratio < 0:
        raise ValidationError("ratio must be >= 0")
    w = p.weights
    var = variance(problem, x, p)
    if var > 0.0:
        q = w + math.sqrt(2.0 * ratio) * svp_direction(problem, x, p)
    else:
        v = math.sqrt(2.0 * w[0] / (1.0 - w[0])) * (np.eye(w.size)[0] - w)
        q = w + math.sqrt(ratio) * v
    if q.min() < -1e-12:
        raise ValidationError(
            "worst case leaves the simplex (component %r); the ellipsoid "
            "radius is too large for this distribution" % float(q.min())
        )
    return Distribution(np.maximum(q, 0.0))


def predict_svp(
    problem: Problem,
    x: int,
    emp: EmpiricalDistribution,
    schedule: RegimeSchedule,
) -> PredictionResult:
    """Variance-penalized predictor: cost + sqrt(2 a_T/T * variance).

    The formula is always evaluated; condition_ok only reports whether the
    ellipsoid worst-case interpretation is certified at this empirical
    distribution.  worst_case is filled in when the variance is positive
    and the attaining point exists inside the simplex.
    """
    x = _check_decision(problem, x)
    T = emp.sample_size
    ratio = speed_ratio(schedule, T)
    p = emp.distribution
    c = cost(problem, x, p)
    var = variance(problem, x, p)
    value = c + math.sqrt(2.0 * ratio * var)
    worst: Optional[Distribution] = None
    if var > 0.0 and p.is_interior:
        try:
            worst = svp_worst_case(problem, x, p, ratio)
        except ValidationError:
            worst = None
    return PredictionResult(
        value=value,
        worst_case=worst,
        condition_ok=dro_condition_holds(p, ratio),
    )


# ---------------------------------------------------------------------------
# batch evaluation over many empirical distributions at once
#
# The disappointment laboratory and the prescriptor both run through these,
# so a decision made on a single sample and the same point of an enumerated
# lattice are evaluated by literally the same code path.


def predictor_value_rows(
    problem: Problem,
    x: int,
    spec: PredictorSpec,
    W: np.ndarray,
    ratio: Optional[float] = None,
    kl_tol: float = 1e-10,
) -> np.ndarray:
    """Predictor values of decision x over a batch of weight rows.

    W has shape (N, d), each row a normalized distribution.  `ratio` is
    a_T/T (needed by svp); a kl spec must carry an explicit radius.
    """
    x = _check_decision(problem, x)
    row = problem.loss.values[x]
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[1] != row.size:
        raise ValidationError("W must be (N, %d)" % row.size)
    kind = spec.kind
    if kind == "saa":
        return W @ row
    if kind == "robust":
        return np.full(W.shape[0], float(row.max()))
    if kind == "svp":
        if ratio is None:
            raise ValidationError("svp needs ratio = a_T/T")
        m = W @ row
        e2 = W @ (row * row)
        var = np.maximum(e2 - m * m, 0.0)
        return m + np.sqrt(2.0 * ratio * var)
    if kind == "kl":
        r = spec.radius
        if r is None:
            raise ValidationError("kl spec must carry a resolved radius")
        if r == 0.0:
            return W @ row
        if row.max() == row.min():
            return np.full(W.shape[0], float(row[0]))
        out = np.empty(W.shape[0])
        for i in range(W.shape[0]):
            out[i] = _kl_dual_solve(row, W[i], float(r), kl_tol)[0]
        return out
    raise ValidationError("unknown predictor kind %r" % (kind,))


def predictor_value_matrix(
    problem: Problem,
    spec: PredictorSpec,
    W: np.ndarray,
    ratio: Optional[float] = None,
    kl_tol: float = 1e-10,
) -> np.ndarray:
    """(N, n_decisions) matrix of predictor values over weight rows W."""
    cols = [
        predictor_value_rows(problem, x, spec, W, ratio=ratio, kl_tol=kl_tol)
        for x in range(problem.n_decisions)
    ]
    return np.column_stack(cols)


def variance_matrix(problem: Problem, W: np.ndarray) -> np.ndarray:
    """(N, n_decisions) loss variances over weight rows W, clamped at 0."""
    W = np.asarray(W, dtype=float)
    L = problem.loss.values
    M = W @ L.T
    E2 = W @ (L * L).T
    return np.maximum(E2 - M * M, 0.0)


def ellipsoid_linear_max(
    loss_row, p: Distribution, a_matrix, radius: float
) -> Tuple[float, Distribution]:
    """Maximize sum_i l_i q_i over {q : (q-p)' A (q-p) <= radius} inside the
    simplex, assuming the ellipsoid slice is certified to fit:
    sqrt(radius) < sigma_min(A) * min_i min(p_i, 1-p_i).

    Closed form: with u = A^-1 l, v = A^-1 e and
    gamma = l'u - (e'u)^2 / (e'v), the maximum is cost(p) + sqrt(radius*gamma)
    at q = p + sqrt(radius/gamma) * (u - (e'u/e'v) v).
    """
    row = np.asarray(loss_row, dtype=float).reshape(-1)
    A = np.asarray(a_matrix, dtype=float)
    d = p.dim
    if row.size != d or A.shape != (d, d):
        raise ValidationError("dimension mismatch")
    if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12):
        raise ValidationError("a_matrix must be symmetric")
    eigs = np.linalg.eigvalsh(A)
    if eigs.min() <= 0.0:
        raise ValidationError("a_matrix must be positive definite")
    if radius < 0:
        raise ValidationError("radius must be >= 0")
    base = float(row @ p.weights)
    if radius == 0.0 or row.max() == row.min():
        return base, p
    lhs = math.sqrt(radius)
    rhs = float(eigs.min()) * float(np.minimum(p.weights, 1.0 - p.weights).min())
    if not lhs < rhs:
        raise EllipsoidConditionError(lhs, rhs)
    e = np.ones(d)
    u = np.linalg.solve(A, row)
    v = np.linalg.solve(A, e)
    beta = float(e @ u) / float(e @ v)
    gamma = float(row @ u) - float(e @ u) ** 2 / float(e @ v)
    if gamma <= 1e-15 * max(1.0, float(row @ row)):
        # loss row proportional to the all-ones vector in A-geometry
        return base, p
    direction = u - beta * v
    q = p.weights + math.sqrt(radius / gamma) * direction
    value = base + math.sqrt(radius * gamma)
    if q.min() < -1e-9:
        raise EllipsoidConditionError(lhs, rhs)
    return value, Distribution(np.maximum(q, 0.0))
