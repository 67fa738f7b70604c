"""Polynomial bases, OLS with rank handling, and residual-scale estimation.

The two-stage method regresses raw terminal wealth on polynomial features
of the current state, keeping both the fitted mean coefficients and the
residual scale.  The scale is either a constant (root mean square with the
degrees-of-freedom correction) or state-dependent, exp(eta . psi), fitted
by maximum likelihood.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

__all__ = [
    "BasisSpec",
    "RegressionMode",
    "FittedContinuation",
    "OlsFit",
    "FitError",
    "build_basis",
    "build_features",
    "fit_ols",
    "fit_log_sigma_mle",
    "fit_classical_direct",
]

_RANK_TOL = 1e-10


class FitError(RuntimeError):
    """Estimation failure; carries the last iterate when applicable."""

    def __init__(self, message, last_iterate=None, gradient_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.gradient_norm = gradient_norm


class RegressionMode(enum.Enum):
    TWO_STAGE_CONST_SIGMA = "two_stage_const_sigma"
    TWO_STAGE_STATE_SIGMA = "two_stage_state_sigma"
    CLASSICAL_DIRECT = "classical_direct"


@dataclass(frozen=True)
class BasisSpec:
    """Monomial basis over (selected predictors, wealth).

    Monomials are ordered graded-lexicographically: all of degree 0, then
    degree 1, ... with predictors before wealth inside each degree.  The
    constant term is always present.  Without ``cross_terms`` only pure
    powers of single variables are kept.
    """

    degree: int = 2
    include_wealth: bool = True
    predictor_subset: tuple[int, ...] | None = None  # None = all predictors
    cross_terms: bool = True

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0")

    def n_variables(self, n_predictors: int) -> int:
        n_z = n_predictors if self.predictor_subset is None else len(self.predictor_subset)
        return n_z + (1 if self.include_wealth else 0)

    def exponent_tuples(self, n_predictors: int) -> list[tuple[int, ...]]:
        nvar = self.n_variables(n_predictors)
        tuples: list[tuple[int, ...]] = []
        for total in range(self.degree + 1):
            if total == 0:
                tuples.append((0,) * nvar)
            elif self.cross_terms:
                for combo in itertools.combinations_with_replacement(range(nvar), total):
                    e = [0] * nvar
                    for v in combo:
                        e[v] += 1
                    tuples.append(tuple(e))
            else:
                for v in range(nvar):
                    e = [0] * nvar
                    e[v] = total
                    tuples.append(tuple(e))
        return tuples

    def feature_count(self, n_predictors: int) -> int:
        return len(self.exponent_tuples(n_predictors))


def build_features(z: np.ndarray, w, spec: BasisSpec) -> np.ndarray:
    """Feature matrix [M x K] for predictor rows ``z`` [M x S] and wealth ``w`` [M]."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    n_predictors = z.shape[1]
    if spec.predictor_subset is not None:
        z = z[:, list(spec.predictor_subset)]
    cols = [z[:, i] for i in range(z.shape[1])]
    if spec.include_wealth:
        w = np.broadcast_to(np.asarray(w, dtype=float), (z.shape[0],))
        cols.append(w)
    vars_ = np.column_stack(cols) if cols else np.empty((z.shape[0], 0))
    tuples = spec.exponent_tuples(n_predictors)
    out = np.empty((z.shape[0], len(tuples)))
    for k, exps in enumerate(tuples):
        col = np.ones(z.shape[0])
        for v, e in enumerate(exps):
            if e:
                col = col * vars_[:, v] ** e
        out[:, k] = col
    return out


def build_basis(z, w, spec: BasisSpec) -> np.ndarray:
    """Feature vector [K] for a single state."""
    z = np.asarray(z, dtype=float).reshape(1, -1)
    if spec.predictor_subset is not None and z.shape[1] < (max(spec.predictor_subset) + 1 if spec.predictor_subset else 0):
        raise ValueError("predictor vector shorter than predictor_subset requires")
    return build_features(z, np.asarray([w], dtype=float), spec)[0]


@dataclass
class OlsFit:
    beta: np.ndarray
    sigma: float
    residuals: np.ndarray
    rank: int
    dropped: tuple[int, ...] = ()

    @property
    def rank_deficient(self) -> bool:
        return bool(self.dropped)


def _standardize(features: np.ndarray):
    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    # constant / zero-variance columns pass through unscaled
    keep = scale > 1e-300
    mean = np.where(keep, mean, 0.0)
    scale = np.where(keep, scale, 1.0)
    is_const = np.all(features == features[0], axis=0)
    mean[is_const] = 0.0
    scale[is_const] = 1.0
    return (features - mean) / scale, mean, scale


def fit_ols(features: np.ndarray, targets: np.ndarray) -> OlsFit:
    """Least squares with pivoted-QR rank detection.

    Columns pivoted out at relative tolerance 1e-10 get zero coefficients
    (no ridge term).  ``sigma`` uses the (M - K) denominator with K the full
    feature count.  Features are standardized internally for conditioning;
    returned coefficients refer to the original columns.
    """
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float)
    m, k = features.shape
    if m <= k:
        raise ValueError(f"need more samples than features, got M={m}, K={k}")
    xs, mean, scale = _standardize(features)
    q, r, piv = scipy.linalg.qr(xs, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > _RANK_TOL * max(diag[0], 1e-300)))
    kept = piv[:rank]
    beta_s = np.zeros(k)
    rhs = q[:, :rank].T @ targets
    beta_s[kept] = scipy.linalg.solve_triangular(r[:rank, :rank], rhs)
    beta = beta_s / scale
    const = np.flatnonzero(np.all(features == features[0], axis=0) & (features[0] != 0.0))
    offset = float(np.dot(beta_s, mean / scale))
    if const.size:
        beta[const[0]] -= offset / features[0, const[0]]
    residuals = targets - features @ beta
    sigma = math.sqrt(float(residuals @ residuals) / (m - k)) if m > k else 0.0
    return OlsFit(
        beta=beta,
        sigma=sigma,
        residuals=residuals,
        rank=rank,
        dropped=tuple(int(j) for j in sorted(piv[rank:])),
    )


def fit_classical_direct(features: np.ndarray, payoffs: np.ndarray) -> np.ndarray:
    """Direct payoff regression; returns coefficients only."""
    return fit_ols(features, payoffs).beta


def fit_log_sigma_mle(
    features_sigma: np.ndarray,
    residuals: np.ndarray,
    init_eta: np.ndarray,
    gtol: float = 1e-6,
    max_iter: int = 1000,
) -> np.ndarray:
    """Fit eta in sigma(state) = exp(psi . eta) by Gaussian maximum likelihood.

    The likelihood is normalized per sample, so the gradient tolerance is
    scale-free in M.  Raises FitError when BFGS stalls above tolerance or
    when residuals are degenerate (the likelihood is then unbounded).
    """
    psi = np.asarray(features_sigma, dtype=float)
    eps = np.asarray(residuals, dtype=float)
    m, kp = psi.shape
    if m <= kp:
        raise ValueError("need more samples than sigma-basis features")
    if float(np.max(np.abs(eps))) == 0.0:
        raise FitError("all residuals are zero; log-sigma likelihood is unbounded")
    eps2 = eps * eps

    def negloglik(eta):
        lin = psi @ eta
        lin = np.clip(lin, -300.0, 300.0)
        return float(np.mean(lin + 0.5 * eps2 * np.exp(-2.0 * lin)))

    def grad(eta):
        lin = np.clip(psi @ eta, -300.0, 300.0)
        weight = 1.0 - eps2 * np.exp(-2.0 * lin)
        return psi.T @ weight / m

    res = minimize(
        negloglik,
        np.asarray(init_eta, dtype=float),
        jac=grad,
        method="BFGS",
        options={"gtol": gtol, "maxiter": max_iter},
    )
    gnorm = float(np.max(np.abs(grad(res.x))))
    if gnorm > 10.0 * gtol:
        raise FitError(
            f"log-sigma MLE did not converge (|grad|={gnorm:.3e})",
            last_iterate=res.x,
            gradient_norm=gnorm,
        )
    return res.x


@dataclass
class FittedContinuation:
    """Per (time, action) regression product used to evaluate CV(z, w)."""

    beta: np.ndarray
    basis: BasisSpec
    mode: RegressionMode
    action_index: int
    time_index: int
    sigma_const: float | None = None
    eta: np.ndarray | None = None
    sigma_basis: BasisSpec | None = None

    def mean(self, features: np.ndarray) -> np.ndarray:
        return features @ self.beta

    def scale(self, features_sigma: np.ndarray | None):
        if self.mode is RegressionMode.TWO_STAGE_STATE_SIGMA:
            return np.exp(np.clip(features_sigma @ self.eta, -300.0, 300.0))
        return self.sigma_const
