"""Special functions: log-gamma, beta function and the regularized incomplete beta.

Everything is evaluated in log space where products of gammas are involved,
so the large-dimension formulas in :mod:`mc_curse.bounds` never overflow.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_TINY = 1e-300
_EPS = 1e-16


class ConvergenceError(ArithmeticError):
    """Raised when the incomplete-beta continued fraction fails to converge."""


class BetaParams(NamedTuple):
    a: float
    b: float

    def check(self) -> "BetaParams":
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"beta shapes must be positive, got a={self.a}, b={self.b}")
        return self


def log_gamma(x: float) -> float:
    """Return ln Gamma(x) for x > 0."""
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def _stirling_corr(x: float) -> float:
    # ln Gamma(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)], valid for x >= 10
    x2 = 1.0 / (x * x)
    return (1.0 / x) * (
        1.0 / 12 - x2 * (1.0 / 360 - x2 * (1.0 / 1260 - x2 * (1.0 / 1680 - x2 / 1188)))
    )


def log_beta(a: float, b: float) -> float:
    """ln B(a, b), accurate when one or both arguments are huge.

    Plain ``lgamma(a) + lgamma(b) - lgamma(a + b)`` cancels catastrophically
    once ``b`` is around 1e6 or more, so large arguments go through the
    Stirling remainder instead.
    """
    BetaParams(a, b).check()
    p, q = (a, b) if a <= b else (b, a)
    if q < 10:
        return math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)
    s = p + q
    if p >= 10:
        corr = _stirling_corr(p) + _stirling_corr(q) - _stirling_corr(s)
        return (
            -0.5 * math.log(q)
            + LN_SQRT_2PI
            + corr
            + (p - 0.5) * math.log(p / s)
            + q * math.log1p(-p / s)
        )
    corr = _stirling_corr(q) - _stirling_corr(s)
    return math.lgamma(p) + corr + p - p * math.log(s) + (q - 0.5) * math.log1p(-p / s)


def beta_fn(a: float, b: float) -> float:
    """The complete beta function B(a, b)."""
    return math.exp(log_beta(a, b))


def beta_coefficient(n: int) -> float:
    """Normalizing constant of the density of a squared coordinate of U(unit n-ball).

    Equals Gamma(n/2 + 1) / (Gamma(1/2) Gamma((n + 1)/2)) = 1 / B(1/2, (n + 1)/2).
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return math.exp(-log_beta(0.5, (n + 1) / 2.0))


def _betacf(x: np.ndarray, a: float, b: float, max_iter: int) -> np.ndarray:
    """Modified Lentz evaluation of the incomplete-beta continued fraction, vectorized over x."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d_new = 1.0 + aa * d
        d_new = np.where(np.abs(d_new) < _TINY, _TINY, d_new)
        c_new = 1.0 + aa / c
        c_new = np.where(np.abs(c_new) < _TINY, _TINY, c_new)
        d_new = 1.0 / d_new
        h_new = h * d_new * c_new
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d_new = 1.0 + aa * d_new
        d_new = np.where(np.abs(d_new) < _TINY, _TINY, d_new)
        c_new = 1.0 + aa / c_new
        c_new = np.where(np.abs(c_new) < _TINY, _TINY, c_new)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        h_new = h_new * delta
        # converged entries are frozen so further sweeps cannot perturb them
        c = np.where(active, c_new, c)
        d = np.where(active, d_new, d)
        h = np.where(active, h_new, h)
        active &= np.abs(delta - 1.0) >= _EPS
        if not active.any():
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b})"
    )


def reg_inc_beta(x, a: float, b: float):
    """Regularized incomplete beta I(x; a, b), the Beta(a, b) cdf.

    ``x`` may be a scalar or an array; the return type follows. Exactly 0
    at x = 0 and exactly 1 at x = 1. Uses the continued fraction directly
    for x < (a + 1)/(a + b + 2) and the reflection I(x; a, b) = 1 - I(1 - x; b, a)
    otherwise.
    """
    BetaParams(a, b).check()
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~((xs >= 0.0) & (xs <= 1.0))):
        raise ValueError("reg_inc_beta requires 0 <= x <= 1")

    out = np.empty_like(xs)
    out[xs == 0.0] = 0.0
    out[xs == 1.0] = 1.0
    interior = (xs > 0.0) & (xs < 1.0)
    if interior.any():
        lbeta = log_beta(a, b)
        max_iter = 1000 + int(20 * math.sqrt(max(a, b)))
        swap = xs > (a + 1.0) / (a + b + 2.0)

        direct = interior & ~swap
        if direct.any():
            xd = xs[direct]
            front = np.exp(a * np.log(xd) + b * np.log1p(-xd) - lbeta) / a
            out[direct] = front * _betacf(xd, a, b, max_iter)

        flipped = interior & swap
        if flipped.any():
            yd = 1.0 - xs[flipped]
            front = np.exp(b * np.log(yd) + a * np.log1p(-yd) - lbeta) / b
            out[flipped] = 1.0 - front * _betacf(yd, b, a, max_iter)

    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if scalar else out
