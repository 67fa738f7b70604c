"""Forward evaluation of a solved policy and distributional reporting.

Evaluates a Policy path-by-path (vectorized) on fresh or in-sample
scenarios, applying the stop-profit rule and transaction costs, and
produces summary statistics, histogram data, percentile bands, sensitivity
sweeps, and efficient-frontier points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .market import ScenarioSet
from .objectives import (
    CrraParams,
    RangeKind,
    TargetRange,
    crra_utility,
    ftrs_payoff,
    strs_payoff,
)
from .solver import (
    CostSpec,
    Policy,
    _ContinuationEvaluator,
    step_wealth,
    stop_profit_check,
)

__all__ = [
    "WealthDistribution",
    "StatsReport",
    "DEFAULT_PERCENTILES",
    "evaluate_policy",
    "summarize",
    "sensitivity_sweep",
    "frontier",
    "write_stats_csv",
    "write_histogram_csv",
    "write_percentile_csv",
    "write_frontier_csv",
]

DEFAULT_PERCENTILES = (0.05, 1.0, 5.0, 25.0, 50.0, 75.0, 95.0, 99.0, 99.95)


@dataclass(frozen=True)
class WealthDistribution:
    """Terminal wealth samples plus per-period percentile bands.

    Terminal wealth for stop-profit-locked paths is the upper target plus
    the withdrawn surplus grown risk-free, so overshoot mass is visible in
    the distribution; ``locked`` marks those paths (their objective payoff
    is the at-target payoff regardless of the surplus).
    """

    terminal_wealth: np.ndarray  # [M]
    withdrawn_surplus: np.ndarray  # [M]
    locked: np.ndarray  # [M] bool
    per_period_percentiles: np.ndarray  # [(N+1) x P]
    percentiles: tuple[float, ...]
    seed: int
    benchmark_terminal: np.ndarray | None = None  # [M], RELATIVE objectives only

    @property
    def n_paths(self) -> int:
        return self.terminal_wealth.shape[0]


@dataclass(frozen=True)
class StatsReport:
    """Table-style summary of one evaluated run."""

    mean: float
    std: float
    downside_prob: float
    containment_prob: float
    overshoot_prob: float
    location_ratio: float  # nan when the upper bound is infinite
    v0_estimate: float


def evaluate_policy(
    policy: Policy, scenarios: ScenarioSet, cost: CostSpec = CostSpec()
) -> WealthDistribution:
    """Run the fitted policy forward on the scenario set, W0 = 1.

    At each decision time, paths at or above the stop-profit threshold move
    fully to cash (paying turnover cost on the trade) and stay there; their
    terminal wealth is the upper target plus the surplus grown risk-free.
    """
    m, horizon, d = scenarios.excess_returns.shape
    if policy.grid.n_assets != d or policy.horizon != horizon:
        raise ValueError("policy and scenarios are dimensionally incompatible")
    rf = scenarios.risk_free_gross
    evaluator = _ContinuationEvaluator(policy)
    wealth = np.empty((m, horizon + 1))
    wealth[:, 0] = 1.0
    w = np.ones(m)
    prev = np.zeros((m, d))
    locked = np.zeros(m, dtype=bool)
    surplus = np.zeros(m)
    objective = policy.objective
    for n in range(horizon):
        if policy.stop_profit_enabled:
            hit = ~locked & stop_profit_check(w, n, objective, rf, horizon)
            if np.any(hit):
                idx = np.flatnonzero(hit)
                threshold = objective.upper * rf ** (-(horizon - n))
                trade_cost = cost.proportional_rate * np.abs(prev[idx]).sum(axis=1)
                kept = w[idx] * (1.0 - trade_cost)
                surplus[idx] = np.maximum(kept - threshold, 0.0) * rf ** (horizon - n)
                w[idx] = np.minimum(kept, threshold)
                prev[idx] = 0.0
                locked[idx] = True
        active = np.flatnonzero(~locked)
        if active.size:
            cv = evaluator.values(
                policy.models[n], scenarios.predictors[active, n], w[active]
            )
            chosen = policy.grid.actions[np.argmax(cv, axis=1)]
            w[active] = step_wealth(
                w[active], prev[active], chosen,
                scenarios.excess_returns[active, n], rf, cost,
            )
            prev[active] = chosen
        if np.any(locked):
            w[locked] *= rf
        wealth[:, n + 1] = w
    terminal = np.where(locked, w + surplus, w)
    wealth[:, horizon] = terminal
    bands = np.percentile(wealth, DEFAULT_PERCENTILES, axis=0).T
    bench = None
    if isinstance(objective, TargetRange) and objective.kind.is_relative:
        bench = scenarios.benchmark_wealth(policy.benchmark)[:, horizon]
    return WealthDistribution(
        terminal_wealth=terminal,
        withdrawn_surplus=surplus,
        locked=locked,
        per_period_percentiles=bands,
        percentiles=DEFAULT_PERCENTILES,
        seed=scenarios.seed,
        benchmark_terminal=bench,
    )


def _objective_payoff(dist: WealthDistribution, objective) -> np.ndarray:
    """Per-path payoff; locked paths score the at-target (maximal band) payoff."""
    if isinstance(objective, CrraParams):
        return crra_utility(dist.terminal_wealth, objective)
    w = dist.terminal_wealth
    if objective.kind.is_relative:
        w = w - dist.benchmark_terminal
    if objective.kind.is_skewed:
        base = strs_payoff(w, _as_kind(objective, RangeKind.STRS))
        locked_value = objective.upper - objective.lower
    else:
        base = ftrs_payoff(w, _as_kind(objective, RangeKind.FTRS))
        locked_value = 1.0
    return np.where(dist.locked, locked_value, base)


def _as_kind(target: TargetRange, kind: RangeKind) -> TargetRange:
    return TargetRange(lower=target.lower, upper=target.upper, kind=kind)


def summarize(dist: WealthDistribution, objective: TargetRange | CrraParams) -> StatsReport:
    """Sample statistics of terminal wealth plus the objective's value estimate."""
    w = dist.terminal_wealth
    mean = float(np.mean(w))
    std = float(np.std(w, ddof=1)) if w.size > 1 else 0.0
    downside = float(np.mean(w < 1.0))
    if isinstance(objective, TargetRange):
        x = w - dist.benchmark_terminal if objective.kind.is_relative else w
        below = np.mean(x < objective.lower)
        above = np.mean(x > objective.upper) if math.isfinite(objective.upper) else 0.0
        containment = 1.0 - below - above
        if math.isfinite(objective.upper):
            ratio = (mean - objective.lower) / (objective.upper - objective.lower)
        else:
            ratio = math.nan
    else:
        below = above = 0.0
        containment = 1.0
        ratio = math.nan
    return StatsReport(
        mean=mean,
        std=std,
        downside_prob=downside,
        containment_prob=float(containment),
        overshoot_prob=float(above),
        location_ratio=ratio,
        v0_estimate=float(np.mean(_objective_payoff(dist, objective))),
    )


def sensitivity_sweep(config, vary: str, values) -> list[tuple[float, StatsReport]]:
    """Re-solve and evaluate per bound value with common random numbers.

    ``vary`` is "upper" or "lower"; each grid point re-runs the solver on
    the identical scenario set (same seed).
    """
    from .pipeline import solve_from_config

    if vary not in ("upper", "lower"):
        raise ValueError("vary must be 'upper' or 'lower'")
    values = list(values)
    if not values:
        raise ValueError("empty sweep grid")
    out = []
    for v in values:
        cfg = config.with_objective(**{vary: v})
        result = solve_from_config(cfg)
        out.append((v, result.report))
    return out


def frontier(config, strategy_family: str, params) -> list[tuple[object, StatsReport]]:
    """One solved-and-evaluated point per parameter, common scenarios.

    ``strategy_family`` is "strs" (params: (lower, upper) pairs) or "crra"
    (params: gamma values).
    """
    from .pipeline import solve_from_config

    params = list(params)
    if not params:
        raise ValueError("empty frontier parameter list")
    out = []
    for p in params:
        if strategy_family == "strs":
            lower, upper = p
            cfg = config.with_objective(kind="strs", lower=lower, upper=upper)
        elif strategy_family == "crra":
            cfg = config.with_objective(kind="crra", gamma=p)
        else:
            raise ValueError("strategy_family must be 'strs' or 'crra'")
        result = solve_from_config(cfg)
        out.append((p, result.report))
    return out


# ---------------------------------------------------------------------------
# CSV writers; every file starts with provenance comment lines


def _open_with_provenance(path, config_hash: str | None, seed: int):
    fh = open(path, "w", newline="")
    fh.write(f"# config_hash={config_hash or 'n/a'}\n# seed={seed}\n")
    return fh


def write_stats_csv(path, report: StatsReport, config_hash: str | None, seed: int) -> None:
    with _open_with_provenance(path, config_hash, seed) as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["v0", "mean", "std", "downside_prob", "containment_prob", "overshoot_prob", "location_ratio"]
        )
        writer.writerow(
            [
                repr(report.v0_estimate), repr(report.mean), repr(report.std),
                repr(report.downside_prob), repr(report.containment_prob),
                repr(report.overshoot_prob), repr(report.location_ratio),
            ]
        )


def write_histogram_csv(path, dist: WealthDistribution, config_hash: str | None, n_bins: int = 100) -> None:
    counts, edges = np.histogram(dist.terminal_wealth, bins=n_bins)
    with _open_with_provenance(path, config_hash, dist.seed) as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count"])
        for i in range(n_bins):
            writer.writerow([repr(edges[i]), repr(edges[i + 1]), counts[i]])


def write_percentile_csv(path, dist: WealthDistribution, config_hash: str | None) -> None:
    with _open_with_provenance(path, config_hash, dist.seed) as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", "percentile", "value"])
        for n in range(dist.per_period_percentiles.shape[0]):
            for k, p in enumerate(dist.percentiles):
                writer.writerow([n, p, repr(dist.per_period_percentiles[n, k])])


def write_frontier_csv(path, points, config_hash: str | None, seed: int) -> None:
    with _open_with_provenance(path, config_hash, seed) as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "mean", "std", "downside_prob", "v0"])
        for param, report in points:
            writer.writerow(
                [param, repr(report.mean), repr(report.std), repr(report.downside_prob), repr(report.v0_estimate)]
            )
