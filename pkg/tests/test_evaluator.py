"""Forward policy evaluation, summary statistics, CSV reporting."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from targetrange.config import DataConfig, ObjectiveConfig, RunConfig
from targetrange.evaluate import (
    DEFAULT_PERCENTILES,
    WealthDistribution,
    evaluate_policy,
    frontier,
    sensitivity_sweep,
    summarize,
    write_frontier_csv,
    write_histogram_csv,
    write_percentile_csv,
    write_stats_csv,
)
from targetrange.market import simulate_paths
from targetrange.objectives import CrraParams, RangeKind, TargetRange, crra_utility, strs_cv
from targetrange.regression import BasisSpec, RegressionMode
from targetrange.solver import CostSpec, SolverOptions, backward_induction, enumerate_grid
from targetrange.synthetic import SyntheticSpec, make_model

from test_solver import deterministic_scenarios


def gaussian_dist(mu=1.1, sigma=0.08, m=1_000_000, seed=0):
    rng = np.random.default_rng(seed)
    w = rng.normal(mu, sigma, m)
    return WealthDistribution(
        terminal_wealth=w,
        withdrawn_surplus=np.zeros(m),
        locked=np.zeros(m, dtype=bool),
        per_period_percentiles=np.percentile(w, DEFAULT_PERCENTILES)[None, :],
        percentiles=DEFAULT_PERCENTILES,
        seed=seed,
    )


class TestEvaluatePolicy:
    def test_cash_only_market_grows_risk_free(self):
        # assets lose money every month with certainty, so the policy stays
        # in cash and costless evaluation compounds at the risk-free rate
        scen = deterministic_scenarios(m=40, n=4, log_returns=(-0.01, -0.02))
        grid = enumerate_grid(2, 0.5)
        policy = backward_induction(
            scen, grid, TargetRange(0.9, math.inf), BasisSpec(degree=1), CostSpec(0.0),
            SolverOptions(mode=RegressionMode.CLASSICAL_DIRECT),
        )
        dist = evaluate_policy(policy, scen, CostSpec(0.0))
        np.testing.assert_allclose(dist.terminal_wealth, scen.risk_free_gross**4, rtol=1e-13)
        assert not dist.locked.any()
        assert np.all(dist.withdrawn_surplus == 0.0)

    def test_locked_paths_report_target_plus_surplus(self):
        # an upper target already funded at time 0 locks every path at the
        # start: wealth is capped at the discounted target, the excess is
        # withdrawn, and both legs then compound risk-free, so the reported
        # terminal is exactly rf^N
        scen = deterministic_scenarios(m=30, n=6, log_returns=(0.02, 0.02))
        grid = enumerate_grid(2, 0.5)
        target = TargetRange(0.9, 0.98)
        policy = backward_induction(scen, grid, target, BasisSpec(degree=1), CostSpec(0.0))
        dist = evaluate_policy(policy, scen, CostSpec(0.0))
        assert dist.locked.all()
        assert np.all(dist.withdrawn_surplus > 0.0)
        np.testing.assert_allclose(
            dist.terminal_wealth, scen.risk_free_gross**6, rtol=1e-12
        )
        report = summarize(dist, target)
        # locked paths score the full band width
        assert report.v0_estimate == pytest.approx(target.upper - target.lower)

    def test_dimension_mismatch(self):
        scen = deterministic_scenarios(m=20, n=3)
        policy = backward_induction(
            scen, enumerate_grid(2, 0.5), TargetRange(1.0, 1.1), BasisSpec(degree=1)
        )
        other = deterministic_scenarios(m=20, n=4)
        with pytest.raises(ValueError):
            evaluate_policy(policy, other)

    def test_percentile_bands_monotone(self):
        model = make_model(SyntheticSpec(n_assets=2, n_rows=240), seed=2)
        scen = simulate_paths(model, 500, 4, 0.02, seed=3)
        policy = backward_induction(
            scen, enumerate_grid(2, 0.5), TargetRange(1.0, 1.1), BasisSpec(degree=2)
        )
        dist = evaluate_policy(policy, scen)
        assert dist.per_period_percentiles.shape == (5, len(DEFAULT_PERCENTILES))
        diffs = np.diff(dist.per_period_percentiles, axis=1)
        assert np.all(diffs >= -1e-12)


class TestSummarize:
    def test_gaussian_sample_matches_analytics(self):
        mu, sigma = 1.08, 0.06
        dist = gaussian_dist(mu, sigma)
        m = dist.n_paths
        target = TargetRange(1.0, 1.15)
        report = summarize(dist, target)
        z = lambda x: (x - mu) / sigma
        p_below = norm.cdf(z(target.lower))
        p_above = 1.0 - norm.cdf(z(target.upper))
        contain = 1.0 - p_below - p_above

        def within(est, true, bernoulli_p):
            se = math.sqrt(bernoulli_p * (1 - bernoulli_p) / m)
            assert abs(est - true) <= 4 * max(se, 1e-9)

        within(report.downside_prob, p_below, p_below)
        within(report.containment_prob, contain, contain)
        within(report.overshoot_prob, p_above, p_above)
        assert report.mean == pytest.approx(mu, abs=4 * sigma / math.sqrt(m))
        assert report.std == pytest.approx(sigma, rel=0.01)
        # mean payoff converges to the closed-form truncated expectation
        true_v = strs_cv(mu, sigma, target.lower, target.upper)
        assert report.v0_estimate == pytest.approx(true_v, abs=4 * 0.05 / math.sqrt(m))
        assert report.location_ratio == pytest.approx(
            (report.mean - 1.0) / 0.15, rel=1e-12
        )

    def test_partition_sums_to_one(self):
        dist = gaussian_dist(1.05, 0.1, m=20_000)
        report = summarize(dist, TargetRange(1.0, 1.1))
        total = report.containment_prob + report.overshoot_prob + float(
            np.mean(dist.terminal_wealth < 1.0)
        )
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_ftrs_value_is_containment(self):
        dist = gaussian_dist(1.05, 0.1, m=20_000)
        t = TargetRange(1.0, 1.1, RangeKind.FTRS)
        report = summarize(dist, t)
        inside = np.mean(
            (dist.terminal_wealth >= 1.0) & (dist.terminal_wealth <= 1.1)
        )
        assert report.v0_estimate == pytest.approx(float(inside), abs=1e-12)

    def test_crra_value_is_mean_utility(self):
        dist = gaussian_dist(1.1, 0.05, m=10_000)
        p = CrraParams(4.0)
        report = summarize(dist, p)
        assert report.v0_estimate == pytest.approx(
            float(np.mean(crra_utility(dist.terminal_wealth, p))), rel=1e-12
        )
        assert math.isnan(report.location_ratio)
        assert report.containment_prob == 1.0

    def test_unbounded_upper_has_nan_ratio(self):
        dist = gaussian_dist(m=1000)
        report = summarize(dist, TargetRange(1.0, math.inf))
        assert math.isnan(report.location_ratio)
        assert report.overshoot_prob == 0.0


class TestValueConsistency:
    """The solver's v0 and the realized mean payoff should roughly agree.

    The regression-based value uses a Gaussian plug-in for terminal wealth,
    which carries a visible bias for kinked range payoffs; the check is
    therefore a loose reconciliation, not an identity.
    """

    def _run(self, objective, mode=RegressionMode.TWO_STAGE_CONST_SIGMA):
        model = make_model(SyntheticSpec(n_assets=2, n_rows=240), seed=5)
        scen = simulate_paths(model, 4000, 6, 0.02, seed=11)
        policy = backward_induction(
            scen, enumerate_grid(2, 0.5), objective, BasisSpec(degree=2),
            CostSpec(0.001), SolverOptions(mode=mode),
        )
        dist = evaluate_policy(policy, scen, CostSpec(0.001))
        return policy, summarize(dist, objective), dist

    def test_strs_reconciles_loosely(self):
        policy, report, dist = self._run(TargetRange(1.0, 1.1))
        payoff_se = 0.05 / math.sqrt(dist.n_paths)
        gap = abs(policy.v0_estimate - report.v0_estimate)
        assert gap <= 0.30 * max(abs(report.v0_estimate), 0.01) + 3 * payoff_se

    def test_crra_reconciles(self):
        p = CrraParams(4.0)
        policy, report, dist = self._run(p)
        util = crra_utility(dist.terminal_wealth, p)
        se = float(np.std(util, ddof=1)) / math.sqrt(dist.n_paths)
        gap = abs(policy.v0_estimate - report.v0_estimate)
        assert gap <= 0.02 * abs(report.v0_estimate) + 3 * se


def tiny_config(**overrides):
    base = dict(
        data=DataConfig(synthetic_assets=2, synthetic_rows=180),
        objective=ObjectiveConfig(kind="strs", lower=1.0, upper=1.1),
        horizon=2,
        m_paths=300,
        mesh=0.5,
        seed=1,
    )
    base.update(overrides)
    return RunConfig(**base)


class TestSweepAndFrontier:
    def test_upper_bound_sweep(self):
        points = sensitivity_sweep(tiny_config(), "upper", [1.05, 1.15])
        assert [p[0] for p in points] == [1.05, 1.15]
        for _, report in points:
            assert math.isfinite(report.mean)

    def test_invalid_sweep_inputs(self):
        with pytest.raises(ValueError):
            sensitivity_sweep(tiny_config(), "sideways", [1.1])
        with pytest.raises(ValueError):
            sensitivity_sweep(tiny_config(), "upper", [])

    def test_frontier_families(self):
        strs_pts = frontier(tiny_config(), "strs", [(1.0, 1.05), (1.0, 1.2)])
        assert len(strs_pts) == 2
        crra_pts = frontier(tiny_config(), "crra", [2.0, 8.0])
        assert all(r.v0_estimate < 0 for _, r in crra_pts)
        with pytest.raises(ValueError):
            frontier(tiny_config(), "nope", [1.0])
        with pytest.raises(ValueError):
            frontier(tiny_config(), "strs", [])


class TestCsvWriters:
    def _dist_and_report(self):
        dist = gaussian_dist(m=5000)
        return dist, summarize(dist, TargetRange(1.0, 1.2))

    def test_stats_csv_provenance_and_reread(self, tmp_path):
        dist, report = self._dist_and_report()
        path = tmp_path / "stats.csv"
        write_stats_csv(path, report, "abc123", dist.seed)
        lines = path.read_text().splitlines()
        assert lines[0] == "# config_hash=abc123"
        assert lines[1] == f"# seed={dist.seed}"
        header, values = lines[2].split(","), lines[3].split(",")
        row = dict(zip(header, values))
        # repr round-trips every float exactly
        assert float(row["mean"]) == report.mean
        assert float(row["v0"]) == report.v0_estimate
        assert float(row["containment_prob"]) == report.containment_prob

    def test_histogram_counts_sum_to_paths(self, tmp_path):
        dist, _ = self._dist_and_report()
        path = tmp_path / "hist.csv"
        write_histogram_csv(path, dist, None)
        lines = path.read_text().splitlines()
        assert lines[0] == "# config_hash=n/a"
        rows = [l.split(",") for l in lines[3:]]
        assert sum(int(r[2]) for r in rows) == dist.n_paths
        assert len(rows) == 100

    def test_percentile_csv_shape(self, tmp_path):
        dist, _ = self._dist_and_report()
        path = tmp_path / "pct.csv"
        write_percentile_csv(path, dist, "h")
        lines = path.read_text().splitlines()
        assert len(lines) == 3 + dist.per_period_percentiles.size

    def test_frontier_csv(self, tmp_path):
        dist, report = self._dist_and_report()
        path = tmp_path / "frontier.csv"
        write_frontier_csv(path, [(1.1, report), (1.2, report)], "h", 0)
        lines = path.read_text().splitlines()
        assert lines[2] == "param,mean,std,downside_prob,v0"
        assert len(lines) == 5

    def test_writers_deterministic(self, tmp_path):
        dist, report = self._dist_and_report()
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_stats_csv(a, report, "h", 0)
        write_stats_csv(b, report, "h", 0)
        assert a.read_bytes() == b.read_bytes()
