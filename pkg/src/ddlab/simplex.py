"""Probability-simplex primitives.

Distributions over a finite scenario set, empirical distributions with
integer counts, signed differences of distributions, the KL divergence with
its extended-value conventions, the local ellipsoid (chi-squared) norm,
exact enumeration of the lattice of empirical distributions, multinomial
log-probabilities, and reproducible multinomial sampling.

Everything here is immutable after construction and pure given its inputs,
so values can be shared freely across threads.
"""
from __future__ import annotations

import math
from typing import Iterator, Optional

import numpy as np
from scipy.special import gammaln

from .errors import LatticeCapError, ValidationError

# Construction-time tolerances: sums within NORMALIZE_TOL of their target are
# treated as float dust and normalized away; anything past HARD_REJECT_TOL is
# malformed input.
NORMALIZE_TOL = 1e-12
HARD_REJECT_TOL = 1e-6

#: Default ceiling on exact lattice sizes (number of compositions).
DEFAULT_LATTICE_CAP = 10**8


class Distribution:
    """A point of the probability simplex over d scenarios.

    Weights are validated to be nonnegative and to sum to 1 within
    HARD_REJECT_TOL, then normalized so the sum is 1 within NORMALIZE_TOL.
    """

    __slots__ = ("weights",)

    def __init__(self, weights) -> None:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size < 1:
            raise ValidationError("distribution needs at least one weight")
        if not np.all(np.isfinite(w)):
            raise ValidationError("distribution weights must be finite")
        if w.min() < -NORMALIZE_TOL:
            raise ValidationError(
                "negative weight %r at index %d" % (float(w.min()), int(w.argmin()))
            )
        w = np.maximum(w, 0.0)
        s = float(w.sum())
        if abs(s - 1.0) > HARD_REJECT_TOL:
            raise ValidationError("weights sum to %r, not 1" % s)
        w = w / s
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __setattr__(self, name, value):
        raise AttributeError("Distribution is immutable")

    @property
    def dim(self) -> int:
        return self.weights.size

    @property
    def is_interior(self) -> bool:
        """True iff every scenario has strictly positive probability."""
        return bool(np.all(self.weights > 0.0))

    def __len__(self) -> int:
        return self.weights.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Distribution) and np.array_equal(
            self.weights, other.weights
        )

    def __repr__(self) -> str:
        return "Distribution(%s)" % np.array2string(self.weights, separator=", ")


class EmpiricalDistribution:
    """Scenario counts from T i.i.d. samples; the lattice point counts/T."""

    __slots__ = ("counts", "sample_size")

    def __init__(self, counts, sample_size: Optional[int] = None) -> None:
        c = np.asarray(counts)
        if c.dtype.kind not in "iu":
            cf = np.asarray(counts, dtype=float)
            if not np.all(cf == np.round(cf)):
                raise ValidationError("counts must be integers")
            c = np.round(cf).astype(np.int64)
        c = c.astype(np.int64).reshape(-1)
        if c.size < 1 or c.min() < 0:
            raise ValidationError("counts must be nonnegative")
        total = int(c.sum())
        if sample_size is None:
            sample_size = total
        if total != int(sample_size):
            raise ValidationError(
                "counts sum to %d, expected sample_size %d" % (total, sample_size)
            )
        if sample_size < 1:
            raise ValidationError("sample_size must be >= 1")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "sample_size", int(sample_size))

    def __setattr__(self, name, value):
        raise AttributeError("EmpiricalDistribution is immutable")

    @property
    def dim(self) -> int:
        return self.counts.size

    @property
    def distribution(self) -> Distribution:
        """The induced point counts/T of the simplex."""
        return Distribution(self.counts / self.sample_size)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EmpiricalDistribution)
            and self.sample_size == other.sample_size
            and np.array_equal(self.counts, other.counts)
        )

    def __repr__(self) -> str:
        return "EmpiricalDistribution(%s, T=%d)" % (
            np.array2string(self.counts, separator=", "),
            self.sample_size,
        )


class SimplexDelta:
    """A signed difference of two distributions: components sum to 0."""

    __slots__ = ("components",)

    def __init__(self, components) -> None:
        v = np.asarray(components, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValidationError("delta components must be finite")
        # zero-sum within float dust, scaled by the vector's own magnitude
        scale = max(1.0, float(np.abs(v).sum()))
        if abs(float(v.sum())) > NORMALIZE_TOL * scale:
            raise ValidationError("delta components sum to %r, not 0" % float(v.sum()))
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "components", v)

    def __setattr__(self, name, value):
        raise AttributeError("SimplexDelta is immutable")

    @property
    def dim(self) -> int:
        return self.components.size


def kl_divergence(p: Distribution, q: Distribution) -> float:
    """Relative entropy sum_i p_i log(p_i/q_i), extended-valued.

    Conventions: 0*log(0/q) = 0 and p*log(p/0) = +inf, so the value is
    finite iff support(p) is contained in support(q).  Infinity is returned
    as math.inf rather than raised, because ambiguity-set membership tests
    compare it against finite radii.
    """
    pw, qw = p.weights, q.weights
    if pw.size != qw.size:
        raise ValidationError("dimension mismatch: %d vs %d" % (pw.size, qw.size))
    mask = pw > 0.0
    if np.any(qw[mask] == 0.0):
        return math.inf
    return float(np.sum(pw[mask] * np.log(pw[mask] / qw[mask])))


def ellipsoid_norm_sq(delta: SimplexDelta, p: Distribution) -> float:
    """The local ellipsoid norm squared at p: 0.5 * sum_i delta_i^2 / p_i.

    Requires p interior (the form degenerates on the boundary).
    Homogeneous of degree 2, positive definite on zero-sum vectors.
    """
    if delta.dim != p.dim:
        raise ValidationError("dimension mismatch")
    if not p.is_interior:
        raise ValidationError("ellipsoid norm needs an interior distribution")
    return float(0.5 * np.sum(delta.components**2 / p.weights))


def lattice_size(T: int, d: int) -> int:
    """Number of empirical distributions achievable with T samples over d scenarios."""
    return math.comb(T + d - 1, d - 1)


def _composition_at_rank(T: int, d: int, rank: int) -> list:
    # Unrank in the enumeration order used below: ascending by first count,
    # then recursively on the remainder.
    out = []
    remaining = T
    for pos in range(d - 1):
        c = 0
        while True:
            block = math.comb(remaining - c + d - pos - 2, d - pos - 2)
            if rank < block:
                break
            rank -= block
            c += 1
        out.append(c)
        remaining -= c
    out.append(remaining)
    return out


def enumerate_lattice(
    T: int,
    d: int,
    cap: int = DEFAULT_LATTICE_CAP,
    start: int = 0,
    stop: Optional[int] = None,
) -> Iterator[EmpiricalDistribution]:
    """Yield every composition of T into d nonnegative counts, exactly once.

    The order is deterministic: counts ascend on the first coordinate, then
    recursively on the rest, e.g. (T=2, d=2) gives (0,2), (1,1), (2,0).
    `start`/`stop` select a contiguous rank range in that order, so disjoint
    ranges partition the lattice for parallel consumption; reductions must
    merge ranges in rank order to stay bit-reproducible.
    """
    if T < 1 or d < 2:
        raise ValidationError("need T >= 1 and d >= 2")
    size = lattice_size(T, d)
    if size > cap:
        raise LatticeCapError(size, cap)
    if stop is None:
        stop = size
    start = max(0, start)
    stop = min(size, stop)
    if start >= stop:
        return
    state = _composition_at_rank(T, d, start)
    for _ in range(stop - start):
        yield EmpiricalDistribution(np.array(state, dtype=np.int64), T)
        if state[d - 1] > 0:
            # innermost step: move one unit of slack onto the previous spot
            state[d - 2] += 1
            state[d - 1] -= 1
            continue
        # carry: rightmost index whose right side still holds mass
        j = d - 2
        while j >= 0 and sum(state[j + 1 :]) == 0:
            j -= 1
        if j < 0:
            return
        s = sum(state[j + 1 :])
        state[j] += 1
        for k in range(j + 1, d - 1):
            state[k] = 0
        state[d - 1] = s - 1


def _lattice_counts(T: int, d: int, cap: int = DEFAULT_LATTICE_CAP) -> np.ndarray:
    """All compositions of T into d parts as an (N, d) int array, in rank order."""
    size = lattice_size(T, d)
    if size > cap:
        raise LatticeCapError(size, cap)
    if d == 1:
        return np.array([[T]], dtype=np.int64)
    blocks = []
    for c1 in range(T + 1):
        rest = _lattice_counts(T - c1, d - 1, cap)
        first = np.full((rest.shape[0], 1), c1, dtype=np.int64)
        blocks.append(np.hstack([first, rest]))
    return np.vstack(blocks)


def multinomial_log_prob(e: EmpiricalDistribution, p: Distribution) -> float:
    """log of the multinomial probability of the counts under p.

    Computed through log-gamma; factorials would overflow past T ~ 170.
    Returns -inf when the counts put mass outside support(p).
    """
    if e.dim != p.dim:
        raise ValidationError("dimension mismatch")
    c = e.counts
    w = p.weights
    if np.any((w == 0.0) & (c > 0)):
        return -math.inf
    mask = c > 0
    T = e.sample_size
    return float(
        gammaln(T + 1)
        - np.sum(gammaln(c + 1.0))
        + np.sum(c[mask] * np.log(w[mask]))
    )


def _philox(seed: int, stream: int = 0) -> np.random.Generator:
    # Counter-based splittable generator keyed by (seed, stream): distinct
    # streams are independent and any (seed, stream) pair is reproducible.
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF) | (int(stream) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_empirical(
    p: Distribution, T: int, seed: int, stream: int = 0
) -> EmpiricalDistribution:
    """Draw T i.i.d. scenarios from p; deterministic given (seed, stream)."""
    if T < 1:
        raise ValidationError("T must be >= 1")
    rng = _philox(seed, stream)
    counts = rng.multinomial(T, p.weights)
    return EmpiricalDistribution(counts.astype(np.int64), T)
