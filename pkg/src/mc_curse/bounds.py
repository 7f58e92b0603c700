"""Closed-form sample sizes and statistics for Monte Carlo maximization.

Every minimal sample size here has the shape ``ln(1 - p) / ln(1 - q)``,
where ``q`` is the probability that a single uniform draw lands in the
delta-optimal region. ``q`` is tiny in high dimension, so the denominator
is always formed with ``log1p`` and ``q`` itself is computed without
subtracting nearly equal numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .specfun import beta_coefficient, beta_fn, reg_inc_beta

EXACT_LIMIT = 2**53
_SNAP_ULPS = 8 * 2.0**-52


@dataclass(frozen=True)
class AccuracySpec:
    delta: float
    p: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0, 1), got {self.p}")


@dataclass(frozen=True)
class SampleCount:
    """A sample size; an exact integer below 2**53, a float magnitude above."""

    value: float
    is_ceiled: bool

    @classmethod
    def ceil(cls, x: float) -> "SampleCount":
        if not x >= 0.0:
            raise ValueError(f"sample count must be nonnegative, got {x}")
        if x >= EXACT_LIMIT:
            return cls(float(x), False)
        nearest = round(x)
        # snap a few ulps of rounding noise so exact integers are not bumped up
        if abs(x - nearest) <= _SNAP_ULPS * max(1.0, x):
            return cls(int(nearest), True)
        return cls(int(math.ceil(x)), True)

    def __int__(self) -> int:
        return int(self.value) if self.is_ceiled else int(math.ceil(self.value))

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        if self.is_ceiled:
            return str(self.value)
        return f"{self.value:.6e}"

    def to_json(self):
        return self.value


def _nmin(p: float, q: float) -> SampleCount:
    """Smallest N with 1 - (1 - q)^N >= p."""
    if q >= 1.0:
        return SampleCount(1, True)
    if q <= 0.0:
        return SampleCount(math.inf, False)
    return SampleCount.ceil(math.log1p(-p) / math.log1p(-q))


def _check_dim(n: int, least: int = 1) -> None:
    if int(n) != n or n < least:
        raise ValueError(f"dimension must be an integer >= {least}, got {n}")


def _check_count(count) -> None:
    if count < 1:
        raise ValueError(f"sample count must be >= 1, got {count}")


def tail_l2(n: int, delta: float) -> float:
    """P{x_1 > 1 - delta} for x uniform on the unit n-ball.

    Written as (1/2) I(2 delta - delta^2; (n+1)/2, 1/2), the reflected form of
    1/2 - (1/2) I((1 - delta)^2; 1/2, (n+1)/2), so it keeps full relative
    precision however small it gets.
    """
    _check_dim(n)
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    return 0.5 * reg_inc_beta(2.0 * delta - delta * delta, (n + 1) / 2.0, 0.5)


def prob_empirical_max_l2(n: int, delta: float, count: int) -> float:
    """P{eta > 1 - delta} for the max of x_1 over ``count`` draws from the unit n-ball."""
    _check_count(count)
    q = tail_l2(n, delta)
    return -math.expm1(count * math.log1p(-q))


def nmin_l2(n: int, delta: float, p: float) -> SampleCount:
    """Minimal N so the empirical max of a linear function on the n-ball is delta-accurate w.p. p."""
    _check_dim(n)
    spec = AccuracySpec(delta, p)
    return _nmin(spec.p, tail_l2(n, spec.delta))


def nmin_l2_lower(n: int, delta: float, p: float) -> tuple[SampleCount, SampleCount]:
    """Closed-form lower bounds (N_appr, N~_appr) for :func:`nmin_l2`.

    N_appr replaces the incomplete beta tail by
    beta_n/(n+1) * (2 delta - delta^2)^{(n+1)/2} / (1 - delta).
    N~_appr additionally uses ln(1 - e) ~ -e and beta_n/(n+1) ~ 1/sqrt(2 pi (n+1)).
    """
    _check_dim(n)
    spec = AccuracySpec(delta, p)
    d = spec.delta
    log_shell = 0.5 * (n + 1) * math.log(2.0 * d - d * d) - math.log1p(-d)
    eps = beta_coefficient(n) / (n + 1) * math.exp(log_shell)
    appr = _nmin(spec.p, eps)
    log_tilde = math.log(-math.log1p(-spec.p)) + 0.5 * math.log(2 * math.pi * (n + 1)) - log_shell
    return appr, SampleCount.ceil(math.exp(log_tilde))


def cap_success_probability(r: float, h: float, n: int) -> float:
    """Relative volume of a spherical cap of height ``h`` in the n-ball of radius ``r``.

    Defined for caps up to a hemisphere (0 <= h <= r).
    """
    _check_dim(n)
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    if not 0.0 <= h <= r:
        raise ValueError(f"cap height must satisfy 0 <= h <= r, got h={h}, r={r}")
    x = (2.0 * r * h - h * h) / (r * r)
    return 0.5 * reg_inc_beta(min(x, 1.0), (n + 1) / 2.0, 0.5)


def tail_image2d(n: int, delta: float) -> float:
    """P{||(c_1^T x, c_2^T x)|| > 1 - delta} for one draw from the unit n-ball."""
    _check_dim(n, 2)
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    return math.exp(0.5 * n * math.log(2.0 * delta - delta * delta))


def prob_boundary_hit(n: int, delta: float, count: int) -> float:
    """P{some image among ``count`` draws lies delta-close to the image boundary}."""
    _check_count(count)
    q = tail_image2d(n, delta)
    return -math.expm1(count * math.log1p(-q))


def nmin_multiobjective(n: int, delta: float, p: float) -> SampleCount:
    """Minimal N so some image is delta-close to the unit-circle boundary w.p. p (two objectives)."""
    spec = AccuracySpec(delta, p)
    return _nmin(spec.p, tail_image2d(n, spec.delta))


def nmin_multiobjective_approx(n: int, delta: float, p: float) -> float:
    spec = AccuracySpec(delta, p)
    return -math.log1p(-spec.p) / tail_image2d(n, spec.delta)


def mode_empirical_max(n: int, count: int) -> float:
    """Mode of the max of ``count`` squared image norms (two orthonormal objectives)."""
    _check_dim(n, 3)
    _check_count(count)
    return -math.expm1((2.0 / n) * math.log((n - 2) / (n * count - 2)))


def mode_empirical_max_approx(n: int, count: int) -> float:
    _check_count(count)
    return -math.expm1(-(2.0 / n) * math.log(count))


def expect_empirical_max(n: int, count: int) -> float:
    """E(eta) = 1 - (2/n) B(2/n, N + 1)."""
    _check_dim(n, 2)
    _check_count(count)
    return 1.0 - (2.0 / n) * beta_fn(2.0 / n, count + 1.0)


def expect_empirical_max_approx(n: int, count: int) -> float:
    return mode_empirical_max_approx(n, count)


def nmin_box_axis(delta: float, p: float) -> SampleCount:
    """Box [-1, 1]^n with objective x_1: dimension-free ln(1-p)/ln(1-delta/2)."""
    spec = AccuracySpec(delta, p)
    return _nmin(spec.p, spec.delta / 2.0)


def log_tail_box_diag(n: int, delta: float) -> float:
    # ln of n^n delta^n / (2^n n!), the corner-simplex volume fraction
    return n * math.log(n * delta / 2.0) - math.lgamma(n + 1.0)


def nmin_box_diag(n: int, delta: float, p: float) -> SampleCount:
    """Box [-1, 1]^n with objective sum(x): requires delta <= 1/n."""
    _check_dim(n)
    spec = AccuracySpec(delta, p)
    if spec.delta > 1.0 / n:
        raise ValueError(f"the corner region is a simplex only for delta <= 1/n = {1.0 / n}")
    return _nmin(spec.p, math.exp(log_tail_box_diag(n, spec.delta)))


def nmin_box_diag_stirling(n: int, delta: float, p: float) -> float:
    """Stirling form sqrt(2 pi n) * (-ln(1 - p)) / (delta e / 2)^n of :func:`nmin_box_diag`.

    Because n! > sqrt(2 pi n) (n/e)^n this sits slightly *below* the exact
    count; the ratio is at most exp(1/(12 n)).
    """
    _check_dim(n)
    spec = AccuracySpec(delta, p)
    log_val = (
        0.5 * math.log(2 * math.pi * n)
        + math.log(-math.log1p(-spec.p))
        - n * math.log(spec.delta * math.e / 2.0)
    )
    return math.exp(log_val)


def nmin_l1(n: int, delta: float, p: float) -> SampleCount:
    """Cross-polytope with objective x_1: ln(1-p)/ln(1 - delta^n / 2)."""
    _check_dim(n)
    spec = AccuracySpec(delta, p)
    return _nmin(spec.p, 0.5 * math.exp(n * math.log(spec.delta)))


def nmin_l1_approx(n: int, delta: float, p: float) -> float:
    spec = AccuracySpec(delta, p)
    return -math.log1p(-spec.p) / (0.5 * spec.delta**n)


def uniform_grid_cardinality(n: int, delta: float) -> SampleCount:
    """Mesh points needed on [-1, 1]^n for cell size ``delta``: (2/delta - 1)^n.

    The formula is returned as is; it is only an integer when 2/delta is.
    """
    _check_dim(n)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    x = math.exp(n * math.log(2.0 / delta - 1.0))
    if x < EXACT_LIMIT and abs(x - round(x)) <= 1e-12 * x:
        return SampleCount(int(round(x)), True)
    return SampleCount(x, False)
