"""Scalar special functions backing the closed-form continuation values.

Standard normal pdf/cdf, log-gamma, rising factorial, the confluent
hypergeometric functions 1F1 (Kummer) and Psi (Tricomi), and real moments
of a Gaussian distribution.  All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import erfc as _erfc

__all__ = [
    "ConvergenceError",
    "MomentQuery",
    "std_normal_pdf",
    "std_normal_cdf",
    "ln_gamma",
    "rising_factorial",
    "kummer_1f1",
    "tricomi_psi",
    "gaussian_real_moment",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_PI = math.sqrt(math.pi)

# Power-series radius for 1F1; beyond this the series is refused rather than
# silently switching to asymptotics.
SERIES_RADIUS = 30.0
_MAX_TERMS = 1200


class ConvergenceError(RuntimeError):
    """A series evaluation did not meet tolerance within its budget."""


def std_normal_pdf(x):
    """phi(x) = exp(-x^2/2)/sqrt(2*pi).  Accepts scalars or arrays."""
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


def std_normal_cdf(x):
    """Phi(x), accurate to ~1e-15 absolute via the complementary error function."""
    out = 0.5 * _erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def ln_gamma(z: float) -> float:
    """log Gamma(z) for z > 0."""
    if not (z > 0.0):
        raise ValueError(f"ln_gamma requires z > 0, got {z}")
    return math.lgamma(z)


def rising_factorial(z: float, n: int) -> float:
    """z^(n) = z (z+1) ... (z+n-1), valid for any real z (finite product)."""
    if n < 0:
        raise ValueError("rising_factorial requires n >= 0")
    out = 1.0
    for k in range(n):
        out *= z + k
    return out


def _is_nonpositive_integer(x: float, tol: float = 1e-12) -> bool:
    return x <= tol and abs(x - round(x)) < tol


def kummer_1f1(a: float, b: float, z: float) -> float:
    """Confluent hypergeometric function of the first kind, by power series.

    The series is accumulated in extended precision so that alternating
    terms (z < 0) do not lose accuracy to cancellation.  Refuses |z| beyond
    SERIES_RADIUS instead of switching algorithms.
    """
    if _is_nonpositive_integer(b):
        raise ValueError(f"kummer_1f1 undefined for nonpositive integer b={b}")
    if z == 0.0:
        return 1.0
    if abs(z) > SERIES_RADIUS:
        raise ConvergenceError(
            f"kummer_1f1 series refused for |z|={abs(z):.3g} > {SERIES_RADIUS}"
        )
    with mpmath.workdps(50):
        am = mpmath.mpf(a)
        bm = mpmath.mpf(b)
        zm = mpmath.mpf(z)
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        tol = mpmath.mpf("1e-30")
        for n in range(1, _MAX_TERMS + 1):
            term *= (am + (n - 1)) / (bm + (n - 1)) * zm / n
            total += term
            if term == 0:
                # terminating series (a a nonpositive integer)
                return float(total)
            if n > abs(z) and abs(term) < tol * (abs(total) + tol):
                return float(total)
    raise ConvergenceError(
        f"kummer_1f1({a}, {b}, {z}) did not converge in {_MAX_TERMS} terms"
    )


def _reciprocal_gamma(x: float) -> float:
    """1/Gamma(x); exactly 0 at the poles (nonpositive integers)."""
    if _is_nonpositive_integer(x):
        return 0.0
    return 1.0 / math.gamma(x)


def _psi_two_term(a: float, b: float, z: float) -> float:
    first = math.gamma(1.0 - b) * _reciprocal_gamma(a - b + 1.0)
    value = complex(first * kummer_1f1(a, b, z)) if first != 0.0 else 0.0 + 0.0j
    second = math.gamma(b - 1.0) * _reciprocal_gamma(a)
    if second != 0.0:
        # principal branch of z^(1-b); complex for z < 0, real part kept
        zp = complex(z) ** (1.0 - b)
        value = value + second * zp * kummer_1f1(a - b + 1.0, 2.0 - b, z)
    return value.real


def tricomi_psi(a: float, b: float, z: float) -> float:
    """Confluent hypergeometric function of the second kind.

    Evaluated through the two-term 1F1 combination.  Integer b hits gamma
    poles in both terms; those are handled as the average of b +/- 1e-7
    (removable singularity).  For z < 0 the real part of the principal
    branch is returned.
    """
    if abs(b - round(b)) < 1e-9:
        eps = 1e-7
        return 0.5 * (_psi_two_term(a, b + eps, z) + _psi_two_term(a, b - eps, z))
    return _psi_two_term(a, b, z)


@dataclass(frozen=True)
class MomentQuery:
    """Inputs for E[X^p] with X ~ N(mu, sigma^2)."""

    exponent: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not math.isfinite(self.exponent):
            raise ValueError("exponent must be finite")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")


def gaussian_real_moment(q: MomentQuery) -> float:
    """E[X^p] for X ~ N(mu, sigma^2), real branch.

    The moment is the parity-weighted combination of the symmetric part
    E[|X|^p] and the antisymmetric part E[|X|^p sign(X)], both expressed
    through 1F1:

        E[X^p] = cos^2(pi p/2) * A + sin^2(pi p/2) * B
        A = sigma^p 2^(p/2) Gamma((p+1)/2)/sqrt(pi) 1F1(-p/2, 1/2, -t)
        B = mu sigma^(p-1) 2^((p+1)/2) Gamma(p/2+1)/sqrt(pi) 1F1((1-p)/2, 3/2, -t)

    with t = mu^2/(2 sigma^2).  For even integer p this reduces to A (the
    classical raw moment), for odd integer p to B, and for non-integer p it
    is meaningful when the mass of X below zero is negligible.
    """
    p, mu, sigma = q.exponent, q.mu, q.sigma
    t = 0.5 * (mu / sigma) ** 2
    half = 0.5 * math.pi * p
    if abs(p - round(p)) < 1e-12:
        even = int(round(p)) % 2 == 0
        w_a, w_b = (1.0, 0.0) if even else (0.0, 1.0)
    else:
        c = math.cos(half)
        w_a = c * c
        w_b = 1.0 - w_a
    out = 0.0
    if w_a > 0.0:
        coef = sigma**p * 2.0 ** (0.5 * p) * math.gamma(0.5 * (p + 1.0)) / _SQRT_PI
        out += w_a * coef * kummer_1f1(-0.5 * p, 0.5, -t)
    if w_b > 0.0:
        coef = (
            mu
            * sigma ** (p - 1.0)
            * 2.0 ** (0.5 * (p + 1.0))
            * math.gamma(0.5 * p + 1.0)
            / _SQRT_PI
        )
        out += w_b * coef * kummer_1f1(0.5 * (1.0 - p), 1.5, -t)
    return out
