"""Market data ingestion, VAR(1) calibration, and bootstrap scenario simulation.

Historical monthly log-returns are fit with a first-order vector
autoregression; scenario paths iterate the fitted dynamics with innovations
resampled jointly (whole residual rows, preserving cross-sectional
dependence).  Investable series' log-returns convert to simple gross
returns for the wealth arithmetic.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "IngestError",
    "CalibrationError",
    "IngestOptions",
    "ReturnsTable",
    "VarModel",
    "ScenarioSet",
    "ingest_csv",
    "calibrate_var1",
    "simulate_paths",
    "save_scenarios",
    "load_scenarios",
    "monthly_gross_rate",
]

MONTHS_PER_YEAR = 12


class IngestError(ValueError):
    """Malformed or insufficient input data."""


class CalibrationError(RuntimeError):
    """Calibration refused (collinear or degenerate series)."""


def monthly_gross_rate(annual_rf: float) -> float:
    """Per-period gross risk-free rate: (1 + annual)^(1/12)."""
    if annual_rf <= -1.0:
        raise ValueError("annual rate must exceed -100%")
    return (1.0 + annual_rf) ** (1.0 / MONTHS_PER_YEAR)


@dataclass(frozen=True)
class IngestOptions:
    """Column handling for ingest_csv.

    ``price_columns`` are price levels converted to log-returns by first
    differencing the logs (losing the first row); all other columns are
    decimal log-returns already.  ``drop_gaps`` drops rows with any missing
    cell instead of rejecting the file.
    """

    price_columns: tuple[str, ...] = ()
    drop_gaps: bool = False


@dataclass(frozen=True)
class ReturnsTable:
    """Aligned monthly log-returns: dates [T], series_names [S], log_returns [T x S]."""

    dates: tuple[str, ...]
    series_names: tuple[str, ...]
    log_returns: np.ndarray

    def __post_init__(self):
        t, s = self.log_returns.shape
        if t != len(self.dates) or s != len(self.series_names):
            raise ValueError("log_returns shape does not match dates/series_names")

    @property
    def n_series(self) -> int:
        return len(self.series_names)

    def min_rows(self) -> int:
        return self.n_series + 2


def ingest_csv(path, options: IngestOptions = IngestOptions()) -> ReturnsTable:
    """Read `date,<name1>,...` CSV into an aligned ReturnsTable.

    Price-level columns (per options) are converted to log-returns; the
    first row is then dropped for every series so dates stay aligned.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        if len(header) < 2:
            raise IngestError(f"{path}: need a date column plus at least one series")
        names = tuple(h.strip() for h in header[1:])
        unknown = set(options.price_columns) - set(names)
        if unknown:
            raise IngestError(f"{path}: price_columns not in header: {sorted(unknown)}")
        dates: list[str] = []
        rows: list[list[float]] = []
        gap_rows: list[int] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise IngestError(f"{path}:{lineno}: expected {len(header)} cells, got {len(rec)}")
            dates.append(rec[0].strip())
            vals = []
            has_gap = False
            for name, cell in zip(names, rec[1:]):
                cell = cell.strip()
                if cell == "":
                    has_gap = True
                    vals.append(math.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise IngestError(f"{path}:{lineno}: non-numeric cell {cell!r} in column {name!r}") from None
            if has_gap:
                gap_rows.append(len(rows))
            rows.append(vals)
    if len(dates) != len(set(dates)):
        seen: set[str] = set()
        dupes = {d for d in dates if d in seen or seen.add(d)}
        raise IngestError(f"{path}: duplicate dates: {sorted(dupes)}")
    if gap_rows:
        if not options.drop_gaps:
            raise IngestError(
                f"{path}: {len(gap_rows)} row(s) with missing cells (first at date {dates[gap_rows[0]]}); "
                "pass drop_gaps=True to drop them"
            )
        keep = sorted(set(range(len(rows))) - set(gap_rows))
        dates = [dates[i] for i in keep]
        rows = [rows[i] for i in keep]
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise IngestError(f"{path}: no data rows")
    price_idx = [names.index(c) for c in options.price_columns]
    if price_idx:
        if np.any(data[:, price_idx] <= 0.0):
            raise IngestError(f"{path}: nonpositive price level in a price column")
        logs = np.log(data[:, price_idx])
        data = data[1:].copy()
        data[:, price_idx] = np.diff(logs, axis=0)
        dates = dates[1:]
    table = ReturnsTable(dates=tuple(dates), series_names=names, log_returns=data)
    if data.shape[0] < table.min_rows():
        raise IngestError(
            f"{path}: {data.shape[0]} usable rows < minimum {table.min_rows()} for {table.n_series} series"
        )
    return table


@dataclass(frozen=True)
class VarModel:
    """First-order VAR: x_t = intercept + coefficient @ x_{t-1} + eps_t."""

    intercept: np.ndarray  # [S]
    coefficient: np.ndarray  # [S x S]
    residuals: np.ndarray  # [(T-1) x S]
    series_names: tuple[str, ...]
    investable_index: tuple[int, ...]
    last_state: np.ndarray  # [S], most recent observation (simulation start)

    @property
    def n_series(self) -> int:
        return len(self.series_names)

    @property
    def n_assets(self) -> int:
        return len(self.investable_index)

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.coefficient))))

    def stationary_mean(self) -> np.ndarray:
        return np.linalg.solve(np.eye(self.n_series) - self.coefficient, self.intercept)


def calibrate_var1(table: ReturnsTable, investable: list[str]) -> VarModel:
    """Per-equation OLS of x_t on [1, x_{t-1}], shared regressor matrix.

    Raises CalibrationError naming the offending series when the regressor
    matrix is rank deficient (constant or collinear lagged series).  Records
    a warning, not an error, when the spectral radius is >= 1.
    """
    missing = [n for n in investable if n not in table.series_names]
    if missing:
        raise CalibrationError(f"investable series not in table: {missing}")
    if len(set(investable)) != len(investable):
        raise CalibrationError("investable series list contains duplicates")
    x = table.log_returns
    t, s = x.shape
    if t < table.min_rows():
        raise CalibrationError(f"{t} rows < minimum {table.min_rows()} for {s} series")
    regressors = np.column_stack([np.ones(t - 1), x[:-1]])
    _, r, piv = scipy.linalg.qr(regressors, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > 1e-10 * diag[0]))
    if rank < s + 1:
        bad = [j - 1 for j in piv[rank:] if j > 0]
        bad_names = [table.series_names[j] for j in sorted(bad)]
        raise CalibrationError(f"collinear or constant lagged series: {bad_names}")
    coef_aug, *_ = np.linalg.lstsq(regressors, x[1:], rcond=None)
    intercept = coef_aug[0]
    coefficient = coef_aug[1:].T
    residuals = x[1:] - regressors @ coef_aug
    model = VarModel(
        intercept=intercept,
        coefficient=coefficient,
        residuals=residuals,
        series_names=table.series_names,
        investable_index=tuple(table.series_names.index(n) for n in investable),
        last_state=x[-1].copy(),
    )
    rho = model.spectral_radius()
    if rho >= 1.0:
        warnings.warn(f"VAR(1) spectral radius {rho:.4f} >= 1; dynamics are nonstationary", stacklevel=2)
    return model


@dataclass(frozen=True)
class ScenarioSet:
    """Simulated market scenarios shared by solver and evaluator.

    predictors[m, n, :] is the full state Z at decision time n (n=0 is the
    common initial state); excess_returns[m, n, i] is the simple excess
    return of asset i over period (n, n+1).
    """

    excess_returns: np.ndarray  # [M x N x d]
    predictors: np.ndarray  # [M x (N+1) x S]
    risk_free_gross: float
    seed: int
    investable_index: tuple[int, ...]
    series_names: tuple[str, ...]

    @property
    def n_paths(self) -> int:
        return self.excess_returns.shape[0]

    @property
    def n_periods(self) -> int:
        return self.excess_returns.shape[1]

    @property
    def n_assets(self) -> int:
        return self.excess_returns.shape[2]

    def gross_returns(self) -> np.ndarray:
        """Gross simple asset returns R^f + R, [M x N x d], nonnegative."""
        return self.risk_free_gross + self.excess_returns

    def benchmark_wealth(self, series_name: str) -> np.ndarray:
        """Cumulative wealth of one unit held in ``series_name``, [M x (N+1)]."""
        j = self.series_names.index(series_name)
        logs = self.predictors[:, 1:, j]
        out = np.ones((self.n_paths, self.n_periods + 1))
        out[:, 1:] = np.exp(np.cumsum(logs, axis=1))
        return out


def simulate_paths(
    model: VarModel,
    m_paths: int,
    n_periods: int,
    annual_rf: float,
    seed: int,
) -> ScenarioSet:
    """Bootstrap-residual simulation of the fitted VAR(1).

    Innovations are whole residual rows drawn with replacement.  Path m
    draws from its own spawned substream, so the set of paths 0..m is
    unchanged when m_paths grows.
    """
    if m_paths < 1 or n_periods < 1:
        raise ValueError("m_paths and n_periods must be >= 1")
    s = model.n_series
    n_resid = model.residuals.shape[0]
    children = np.random.SeedSequence(seed).spawn(m_paths)
    # draw all bootstrap indices first (per-path substream), then iterate
    idx = np.empty((m_paths, n_periods), dtype=np.int64)
    for m in range(m_paths):
        idx[m] = np.random.default_rng(children[m]).integers(0, n_resid, size=n_periods)
    predictors = np.empty((m_paths, n_periods + 1, s))
    predictors[:, 0, :] = model.last_state
    for n in range(n_periods):
        predictors[:, n + 1, :] = (
            model.intercept
            + predictors[:, n, :] @ model.coefficient.T
            + model.residuals[idx[:, n]]
        )
    rf = monthly_gross_rate(annual_rf)
    inv = list(model.investable_index)
    excess = np.exp(predictors[:, 1:, inv]) - rf
    return ScenarioSet(
        excess_returns=excess,
        predictors=predictors,
        risk_free_gross=rf,
        seed=int(seed),
        investable_index=model.investable_index,
        series_names=model.series_names,
    )


def save_scenarios(path, scenarios: ScenarioSet) -> None:
    """Write a ScenarioSet to a .npz archive with seed and shape embedded."""
    np.savez_compressed(
        path,
        excess_returns=scenarios.excess_returns,
        predictors=scenarios.predictors,
        risk_free_gross=np.asarray(scenarios.risk_free_gross),
        seed=np.asarray(scenarios.seed, dtype=np.int64),
        investable_index=np.asarray(scenarios.investable_index, dtype=np.int64),
        series_names=np.asarray(scenarios.series_names),
    )


def load_scenarios(path) -> ScenarioSet:
    with np.load(path, allow_pickle=False) as z:
        return ScenarioSet(
            excess_returns=z["excess_returns"],
            predictors=z["predictors"],
            risk_free_gross=float(z["risk_free_gross"]),
            seed=int(z["seed"]),
            investable_index=tuple(int(i) for i in z["investable_index"]),
            series_names=tuple(str(n) for n in z["series_names"]),
        )
