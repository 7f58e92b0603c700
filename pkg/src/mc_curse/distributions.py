"""Laws of projected uniform samples on the Euclidean ball, and their validators.

For xi ~ U(unit n-ball) and a full-rank m x n matrix A, the quadratic form
rho = ((A A^T)^{-1} A xi, A xi) is Beta(m/2, (n - m)/2 + 1). This module
evaluates the resulting densities and cdfs (including those of the maximum
of N i.i.d. copies when m = 2) and checks the law against simulation with a
one-sample Kolmogorov-Smirnov test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
from scipy import special

from .sampling import BallKind, RngStream, sample_multisample
from .specfun import beta_coefficient, reg_inc_beta

RANK_TOL = 1e-10
CLAMP_TOL = 1e-9


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class RhoSample:
    value: float
    clamped: float = 0.0  # size of the rounding excursion removed by clamping


@dataclass(frozen=True)
class KsReport:
    statistic: float
    sample_size: int
    threshold: float
    alpha: float
    pvalue: float

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "sample_size": self.sample_size,
            "threshold": self.threshold,
            "alpha": self.alpha,
            "pvalue": self.pvalue,
            "passed": self.passed,
        }


@dataclass
class LinearMap:
    """An m x n objective matrix of full row rank."""

    matrix: np.ndarray
    _chol: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if a.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        m, n = a.shape
        if m > n:
            raise RankDeficientError(f"need m <= n, got {m} x {n}")
        # pivoted QR: rank is the count of |R_ii| above tolerance relative to |R_00|
        _, r, _ = scipy.linalg.qr(a.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        if diag.size == 0 or diag[0] == 0.0 or np.any(diag < RANK_TOL * diag[0]):
            raise RankDeficientError(f"matrix does not have full row rank {m}")
        self.matrix = a
        self._chol = scipy.linalg.cho_factor(a @ a.T)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def is_orthonormal(self, tol: float = 1e-12) -> bool:
        return np.allclose(self.matrix @ self.matrix.T, np.eye(self.rows), atol=tol, rtol=0)

    @classmethod
    def coordinate(cls, n: int, axes=(0,)) -> "LinearMap":
        a = np.zeros((len(axes), n))
        a[np.arange(len(axes)), list(axes)] = 1.0
        return cls(a)

    @classmethod
    def random_orthonormal(cls, m: int, n: int, rng) -> "LinearMap":
        """Rows orthonormalized from a Gaussian matrix via QR."""
        gen = rng.generator() if isinstance(rng, RngStream) else rng
        q, r = np.linalg.qr(gen.standard_normal((n, m)))
        q = q * np.sign(np.diag(r))  # make the factorization unique
        return cls(q.T.copy())

    def rho(self, points: np.ndarray) -> np.ndarray:
        """Vectorized rho for the rows of ``points``, clamped into [0, 1]."""
        points = np.atleast_2d(points)
        if points.shape[1] != self.cols:
            raise ValueError(f"points have dimension {points.shape[1]}, map expects {self.cols}")
        ax = points @ self.matrix.T
        y = scipy.linalg.cho_solve(self._chol, ax.T).T
        vals = np.einsum("ij,ij->i", y, ax)
        lo, hi = vals.min(initial=0.0), vals.max(initial=1.0)
        if lo < -CLAMP_TOL or hi > 1.0 + CLAMP_TOL:
            raise ValueError(f"rho left [0, 1] by more than {CLAMP_TOL}: range [{lo}, {hi}]")
        return np.clip(vals, 0.0, 1.0)


def project_rho(lmap: LinearMap, point) -> RhoSample:
    """rho = ((A A^T)^{-1} A x, A x) for a single point of the unit l2 ball."""
    point = np.asarray(point, dtype=float)
    if point.shape != (lmap.cols,):
        raise ValueError(f"point must have shape ({lmap.cols},)")
    ax = lmap.matrix @ point
    y = scipy.linalg.cho_solve(lmap._chol, ax)
    raw = float(y @ ax)
    value = min(max(raw, 0.0), 1.0)
    excursion = abs(raw - value)
    if excursion > CLAMP_TOL:
        raise ValueError(f"rho = {raw} is outside [0, 1]; point not in the unit ball?")
    return RhoSample(value, excursion)


def _check_open_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(~((x > 0.0) & (x < 1.0))):
        raise ValueError("argument must lie strictly inside (0, 1)")
    return x


def _ret(x, scalar):
    return float(x) if scalar else x


def pdf_rho_scalar(n: int, x):
    """Density of a squared coordinate of U(unit n-ball): beta_n x^{-1/2} (1 - x)^{(n-1)/2}."""
    scalar = np.ndim(x) == 0
    x = _check_open_unit(x)
    val = beta_coefficient(n) * np.exp(-0.5 * np.log(x) + 0.5 * (n - 1) * np.log1p(-x))
    return _ret(val, scalar)


def cdf_rho_m2(n: int, x):
    """Cdf of rho for two orthonormal objectives: 1 - (1 - x)^{n/2} on [0, 1]."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    inner = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore"):  # log1p(-1) = -inf gives the right limit
        val = -np.expm1(0.5 * n * np.log1p(-inner))
    val = np.where(x < 0.0, 0.0, np.where(x > 1.0, 1.0, val))
    return _ret(val, scalar)


def pdf_rho_m2(n: int, x):
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xi = np.where(inside, x, 0.5)
    val = np.where(inside, 0.5 * n * np.exp((0.5 * n - 1.0) * np.log1p(-xi)), 0.0)
    return _ret(val, scalar)


def cdf_empirical_max_m2(n: int, count: int, x):
    """P{max of ``count`` rho draws <= x} = F_rho(x)**count."""
    scalar = np.ndim(x) == 0
    f = np.asarray(cdf_rho_m2(n, x), dtype=float)
    with np.errstate(divide="ignore"):
        val = np.where(f > 0.0, np.exp(count * np.log(np.where(f > 0.0, f, 1.0))), 0.0)
    return _ret(val, scalar)


def log_pdf_empirical_max_m2(n: int, count: int, x):
    """Log of :func:`pdf_empirical_max_m2`; finite where the density underflows."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if count < 1:
        raise ValueError("count must be >= 1")
    scalar = np.ndim(x) == 0
    x = _check_open_unit(x)
    z = np.exp(0.5 * n * np.log1p(-x))  # (1 - x)^{n/2}
    val = (
        math.log(count * n / 2.0)
        + (0.5 * n - 1.0) * np.log1p(-x)
        + (count - 1) * np.log1p(-z)
    )
    return _ret(val, scalar)


def pdf_empirical_max_m2(n: int, count: int, x):
    """Density of the max of ``count`` i.i.d. rho draws (two orthonormal objectives):
    (N n / 2) (1 - x)^{n/2 - 1} (1 - (1 - x)^{n/2})^{N - 1}.
    """
    return np.exp(log_pdf_empirical_max_m2(n, count, x))


def kolmogorov_critical(alpha: float) -> float:
    """Asymptotic critical value c(alpha) = sqrt(-ln(alpha/2) / 2)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    return math.sqrt(-0.5 * math.log(alpha / 2.0))


def kolmogorov_sf(t: float) -> float:
    """P{K > t} for the limiting Kolmogorov distribution."""
    if t < 1e-3:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * t * t)
        total += term if k % 2 else -term
        if term < 1e-17:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_test(samples, cdf: Callable, alpha: float = 0.01) -> KsReport:
    """One-sample KS test against a continuous ``cdf`` (called on a sorted array)."""
    xs = np.sort(np.asarray(samples, dtype=float).ravel())
    n = xs.size
    if n == 0:
        raise ValueError("ks_test needs at least one sample")
    f = np.asarray(cdf(xs), dtype=float)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    sqrt_n = math.sqrt(n)
    return KsReport(
        statistic=d,
        sample_size=n,
        threshold=kolmogorov_critical(alpha) / sqrt_n,
        alpha=alpha,
        pvalue=kolmogorov_sf(d * sqrt_n),
    )


def _rho_samples(n: int, m: int, count: int, seed: int) -> np.ndarray:
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if count < 1:
        raise ValueError("count must be >= 1")
    root = RngStream(seed)
    lmap = LinearMap.random_orthonormal(m, n, root.substream(0))
    out = []
    sample_multisample(
        BallKind.L2, n, count, root.substream(1), lambda block: out.append(lmap.rho(block))
    )
    return np.concatenate(out)


def validate_fact1(n: int, m: int, count: int, seed: int, alpha: float = 0.01) -> KsReport:
    """KS test of simulated rho against Beta(m/2, (n - m)/2 + 1)."""
    rho = _rho_samples(n, m, count, seed)
    a, b = m / 2.0, (n - m) / 2.0 + 1.0
    return ks_test(rho, lambda x: reg_inc_beta(x, a, b), alpha)


def chi2_cdf(m: int, x):
    return special.gammainc(m / 2.0, np.maximum(np.asarray(x, dtype=float), 0.0) / 2.0)


def validate_fact2(n: int, m: int, count: int, seed: int, alpha: float = 0.01) -> KsReport:
    """KS test of n * rho against chi-square with m degrees of freedom.

    Only exact in the limit n -> infinity; at small n the test is expected to reject.
    """
    rho = _rho_samples(n, m, count, seed)
    return ks_test(n * rho, lambda x: chi2_cdf(m, x), alpha)
