"""Bundled synthetic market with known VAR(1) parameters.

Ships a calm, mildly predictable market for tests and demos: a handful of
risky assets plus one persistent predictor series, generated from explicit
dynamics so calibration can be checked against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import ReturnsTable, VarModel, calibrate_var1

__all__ = ["SyntheticSpec", "ROUGH_MARKET", "CALM_MARKET", "make_table", "make_model", "asset_names"]


@dataclass(frozen=True)
class SyntheticSpec:
    """Ground-truth VAR(1) parameters for the bundled synthetic market.

    Series 0..n_assets-1 are investable assets; the last series is a
    persistent predictor that feeds the asset means.  The default profile
    is calm (monthly means 0.3-0.6%, volatilities 1-3%); pass wider
    ``asset_vol_range``/``asset_mean_range`` for a rough market.
    """

    n_assets: int = 3
    n_rows: int = 360
    asset_mean_range: tuple[float, float] = (0.003, 0.006)
    asset_vol_range: tuple[float, float] = (0.010, 0.028)

    def n_series(self) -> int:
        return self.n_assets + 1

    def parameters(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(intercept, coefficient, innovation covariance) of the true VAR."""
        d = self.n_assets
        s = self.n_series()
        mean = np.concatenate([np.linspace(*self.asset_mean_range, d), [0.002]])
        coef = np.zeros((s, s))
        coef[np.arange(d), np.arange(d)] = 0.08  # mild own-lag momentum
        coef[:d, s - 1] = 0.30  # predictor feeds next-month asset returns
        coef[s - 1, s - 1] = 0.85  # persistent predictor
        intercept = (np.eye(s) - coef) @ mean
        vols = np.concatenate([np.linspace(*self.asset_vol_range, d), [0.0015]])
        corr = np.full((s, s), 0.25)
        np.fill_diagonal(corr, 1.0)
        corr[:d, s - 1] = corr[s - 1, :d] = 0.05
        cov = np.outer(vols, vols) * corr
        return intercept, coef, cov


# high-dispersion profile: terminal wealth spreads far beyond typical target
# bands, which is the regime separating the two regression approaches
ROUGH_MARKET = SyntheticSpec(asset_mean_range=(0.008, 0.016), asset_vol_range=(0.08, 0.16))

# low-dispersion profile: high ratio of mean to volatility, so near-total
# target-range containment is attainable
CALM_MARKET = SyntheticSpec(asset_mean_range=(0.003, 0.006), asset_vol_range=(0.003, 0.009))


def asset_names(spec: SyntheticSpec = SyntheticSpec()) -> list[str]:
    return [f"asset_{i}" for i in range(spec.n_assets)]


def make_table(spec: SyntheticSpec = SyntheticSpec(), seed: int = 0) -> ReturnsTable:
    """Simulate the ground-truth dynamics into a ReturnsTable."""
    intercept, coef, cov = spec.parameters()
    s = spec.n_series()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    chol = np.linalg.cholesky(cov)
    x = np.empty((spec.n_rows, s))
    state = np.linalg.solve(np.eye(s) - coef, intercept)  # start at stationary mean
    burn = 24
    for t in range(-burn, spec.n_rows):
        state = intercept + coef @ state + chol @ rng.standard_normal(s)
        if t >= 0:
            x[t] = state
    names = tuple(asset_names(spec) + ["predictor"])
    dates = tuple(f"{2000 + t // 12}-{t % 12 + 1:02d}" for t in range(spec.n_rows))
    return ReturnsTable(dates=dates, series_names=names, log_returns=x)


def make_model(spec: SyntheticSpec = SyntheticSpec(), seed: int = 0) -> VarModel:
    """Calibrated VarModel of the bundled synthetic market."""
    return calibrate_var1(make_table(spec, seed), asset_names(spec))
