"""Terminal payoff shapes and their closed-form Gaussian continuation values.

Supports the skewed and flat target-range payoffs (absolute and
benchmark-relative) and CRRA power utility.  Continuation values assume the
terminal quantity is Gaussian with forecast mean ``mu`` and scale ``sigma``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import log_ndtr

from .specfun import (
    ConvergenceError,
    MomentQuery,
    gaussian_real_moment,
    std_normal_cdf,
    std_normal_pdf,
)

__all__ = [
    "RangeKind",
    "TargetRange",
    "CrraParams",
    "GaussianForecast",
    "WEALTH_FLOOR",
    "strs_payoff",
    "ftrs_payoff",
    "relative_payoff",
    "crra_utility",
    "strs_continuation",
    "ftrs_continuation",
    "crra_continuation",
    "strs_cv",
    "ftrs_cv",
    "crra_cv_nodes",
    "quadrature_fallbacks",
]

WEALTH_FLOOR = 1e-6

# closed-form CRRA route requires the Gaussian mass below zero to be
# negligible and the hypergeometric argument inside the series radius
_CLOSED_FORM_MIN_RATIO = 5.0

_SIGMA_EPS = 1e-12


class RangeKind(enum.Enum):
    STRS = "strs"
    FTRS = "ftrs"
    RELATIVE_STRS = "relative_strs"
    RELATIVE_FTRS = "relative_ftrs"

    @property
    def is_relative(self) -> bool:
        return self in (RangeKind.RELATIVE_STRS, RangeKind.RELATIVE_FTRS)

    @property
    def is_skewed(self) -> bool:
        return self in (RangeKind.STRS, RangeKind.RELATIVE_STRS)


@dataclass(frozen=True)
class TargetRange:
    """Payoff bounds [lower, upper], normalized by initial wealth."""

    lower: float
    upper: float  # math.inf allowed
    kind: RangeKind = RangeKind.STRS

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"require lower < upper, got [{self.lower}, {self.upper}]")
        if not math.isfinite(self.lower):
            raise ValueError("lower bound must be finite")


@dataclass(frozen=True)
class CrraParams:
    """Constant relative risk aversion coefficient."""

    gamma: float

    def __post_init__(self):
        if not (0.0 < self.gamma <= 100.0) or self.gamma == 1.0:
            raise ValueError(f"gamma must lie in (0, 100] and differ from 1, got {self.gamma}")

    @property
    def exponent(self) -> float:
        return 1.0 - self.gamma


@dataclass(frozen=True)
class GaussianForecast:
    """Conditional mean and residual scale of the terminal quantity."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")


class _FallbackCounter:
    """Counts silent quadrature fallbacks in crra_continuation."""

    def __init__(self):
        self.count = 0

    def reset(self):
        self.count = 0


quadrature_fallbacks = _FallbackCounter()


# ---------------------------------------------------------------------------
# terminal payoffs

def strs_payoff(w, target: TargetRange):
    """(w - L) inside [L, U], zero outside.  Bounds inclusive."""
    if not target.kind.is_skewed:
        raise ValueError("strs_payoff requires a skewed target range")
    w = np.asarray(w, dtype=float)
    inside = (w >= target.lower) & (w <= target.upper)
    out = np.where(inside, w - target.lower, 0.0)
    return float(out) if out.ndim == 0 else out


def ftrs_payoff(w, target: TargetRange):
    """Indicator of [L, U], bounds inclusive."""
    if target.kind.is_skewed:
        raise ValueError("ftrs_payoff requires a flat target range")
    w = np.asarray(w, dtype=float)
    out = ((w >= target.lower) & (w <= target.upper)).astype(float)
    return float(out) if out.ndim == 0 else out


def relative_payoff(w, b, target: TargetRange):
    """Target-range payoff applied to the excess wealth w - b."""
    if not target.kind.is_relative:
        raise ValueError("relative_payoff requires a RELATIVE_* target range")
    excess = np.asarray(w, dtype=float) - np.asarray(b, dtype=float)
    if target.kind is RangeKind.RELATIVE_STRS:
        return strs_payoff(excess, target)
    return ftrs_payoff(excess, target)


def crra_utility(w, p: CrraParams):
    """w^(1-gamma)/(1-gamma), with wealth floored at WEALTH_FLOOR."""
    w = np.maximum(np.asarray(w, dtype=float), WEALTH_FLOOR)
    e = p.exponent
    out = np.power(w, e) / e
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# closed-form continuation values; array-friendly cores first

def strs_cv(mu, sigma, lower: float, upper: float):
    """E[(X-L) 1{L<=X<=U}] for X ~ N(mu, sigma^2).  Vectorized in mu/sigma."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.maximum(np.asarray(sigma, dtype=float), _SIGMA_EPS)
    zl = (lower - mu) / sigma
    if math.isinf(upper):
        cdf_u, pdf_u = 1.0, 0.0
    else:
        zu = (upper - mu) / sigma
        cdf_u = std_normal_cdf(zu)
        pdf_u = std_normal_pdf(zu)
    out = (mu - lower) * (cdf_u - std_normal_cdf(zl)) - sigma * (pdf_u - std_normal_pdf(zl))
    return float(out) if np.ndim(out) == 0 else out


def ftrs_cv(mu, sigma, lower: float, upper: float):
    """P[L <= X <= U] for X ~ N(mu, sigma^2).  Vectorized in mu/sigma."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.maximum(np.asarray(sigma, dtype=float), _SIGMA_EPS)
    zl = (lower - mu) / sigma
    cdf_u = 1.0 if math.isinf(upper) else std_normal_cdf((upper - mu) / sigma)
    out = cdf_u - std_normal_cdf(zl)
    return float(out) if np.ndim(out) == 0 else out


def strs_continuation(f: GaussianForecast, target: TargetRange) -> float:
    if not target.kind.is_skewed:
        raise ValueError("strs_continuation requires a skewed target range")
    return strs_cv(f.mu, f.sigma, target.lower, target.upper)


def ftrs_continuation(f: GaussianForecast, target: TargetRange) -> float:
    if target.kind.is_skewed:
        raise ValueError("ftrs_continuation requires a flat target range")
    return ftrs_cv(f.mu, f.sigma, target.lower, target.upper)


# ---------------------------------------------------------------------------
# CRRA continuation value

def _log_floor_mass(p: float, mu: float, sigma: float) -> float:
    # log of floor^p * P[X <= floor]
    return p * math.log(WEALTH_FLOOR) + float(log_ndtr((WEALTH_FLOOR - mu) / sigma))


def _crra_quadrature(mu: float, sigma: float, gamma: float) -> float:
    """E[max(X, floor)^(1-gamma)]/(1-gamma) by adaptive quadrature.

    Integrates in log-wealth so the near-floor boundary layer (which can
    dominate for strongly negative exponents) is resolved; magnitudes are
    carried in log space and only exponentiated at the end, overflowing to
    +/- inf when the true value exceeds float range.
    """
    p = 1.0 - gamma
    v_lo = math.log(WEALTH_FLOOR)
    v_hi = math.log(mu + 40.0 * sigma) if mu > -40.0 * sigma else v_lo + 1.0
    log_norm = math.log(sigma) + 0.5 * math.log(2.0 * math.pi)

    def g(v):
        u = np.exp(v)
        return (p + 1.0) * v - 0.5 * ((u - mu) / sigma) ** 2 - log_norm

    # candidate peaks: endpoints, the central mode, stationary points of g
    cands = [v_lo, v_hi]
    if mu > 0:
        cands.append(math.log(mu))
    disc = mu * mu + 4.0 * (p + 1.0) * sigma * sigma
    if disc >= 0.0:
        for root in (0.5 * (mu + math.sqrt(disc)), 0.5 * (mu - math.sqrt(disc))):
            if root > 0.0 and v_lo < math.log(root) < v_hi:
                cands.append(math.log(root))
    grid = np.linspace(v_lo, v_hi, 512)
    m = max(float(np.max(g(grid))), max(g(np.asarray(v)) for v in cands))

    def scaled(v):
        return math.exp(min(g(np.asarray(v)) - m, 700.0))

    points = sorted(v for v in cands if v_lo < v < v_hi)
    integral, _ = quad(
        scaled, v_lo, v_hi, points=points or None, limit=400, epsabs=1e-16, epsrel=1e-11
    )
    log_terms = [_log_floor_mass(p, mu, sigma)]
    if integral > 0.0:
        log_terms.append(m + math.log(integral))
    log_e = float(np.logaddexp(*log_terms)) if len(log_terms) == 2 else log_terms[0]
    if log_e > 709.0:
        return math.inf / p
    return math.exp(log_e) / p


def crra_cv_nodes(mu, sigma, gamma: float, n_nodes: int = 128):
    """Vectorized CRRA continuation value on fixed Gauss-Hermite nodes.

    Intended for the solver's inner loops: contributions are computed in
    log space per node so extreme utilities at near-zero wealth penalize an
    action heavily but remain finite and comparable.  Probability mass
    beyond the node range is ignored.
    """
    x, w = np.polynomial.hermite.hermgauss(n_nodes)
    p = 1.0 - gamma
    mu = np.asarray(mu, dtype=float)
    sigma = np.maximum(np.asarray(sigma, dtype=float), _SIGMA_EPS)
    wealth = mu[..., None] + (sigma[..., None] if sigma.ndim else sigma) * math.sqrt(2.0) * x
    log_w = np.log(np.maximum(wealth, WEALTH_FLOOR))
    log_contrib = p * log_w + np.log(w) - 0.5 * math.log(math.pi)
    np.clip(log_contrib, None, 700.0, out=log_contrib)
    out = np.exp(log_contrib).sum(axis=-1) / p
    return float(out) if np.ndim(out) == 0 else out


def crra_continuation(f: GaussianForecast, params: CrraParams) -> float:
    """E[u(W)] for Gaussian terminal wealth under CRRA utility.

    Uses the closed-form Gaussian-moment route when the forecast is far
    enough from zero and the hypergeometric argument is inside the series
    radius; otherwise falls back to floored adaptive quadrature (counted in
    ``quadrature_fallbacks``).
    """
    p = params.exponent
    if f.sigma < _SIGMA_EPS * max(abs(f.mu), 1.0):
        return crra_utility(f.mu, params)
    if f.mu > 0.0 and f.mu / f.sigma >= _CLOSED_FORM_MIN_RATIO:
        try:
            return gaussian_real_moment(MomentQuery(p, f.mu, f.sigma)) / p
        except ConvergenceError:
            pass
    quadrature_fallbacks.count += 1
    return _crra_quadrature(f.mu, f.sigma, params.gamma)
