"""Backward-induction policy solver.

Control randomization, endogenous wealth simulation with proportional
transaction costs, per-action wealth recomputation to the horizon,
per-action regression of terminal wealth (or payoff) on a polynomial state
basis, argmax policy extraction, and the stop-profit rule.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .market import ScenarioSet
from .objectives import (
    CrraParams,
    RangeKind,
    TargetRange,
    crra_cv_nodes,
    crra_utility,
    ftrs_cv,
    ftrs_payoff,
    strs_cv,
    strs_payoff,
)
from .regression import (
    BasisSpec,
    FitError,
    FittedContinuation,
    RegressionMode,
    build_features,
    fit_log_sigma_mle,
    fit_ols,
)

__all__ = [
    "ControlGrid",
    "CostSpec",
    "SolverOptions",
    "Policy",
    "SolverError",
    "enumerate_grid",
    "randomize_controls",
    "step_wealth",
    "simulate_endogenous_wealth",
    "recompute_to_horizon",
    "backward_induction",
    "stop_profit_check",
    "policy_action",
    "save_policy",
    "load_policy",
    "wealth_clamps",
]

_WEALTH_CLAMP = 1e-12

FORMAT_VERSION = 1


class SolverError(RuntimeError):
    """Backward-induction failure, annotated with (time, action) context."""


class _ClampCounter:
    """Counts nonpositive-wealth clamps (should stay zero without leverage)."""

    def __init__(self):
        self.count = 0

    def reset(self):
        self.count = 0


wealth_clamps = _ClampCounter()


@dataclass(frozen=True)
class CostSpec:
    """Proportional fee per unit of risky-weight turnover."""

    proportional_rate: float = 0.001

    def __post_init__(self):
        if self.proportional_rate < 0.0:
            raise ValueError("cost rate must be >= 0")


@dataclass(frozen=True)
class ControlGrid:
    """Discrete no-short, no-borrow weight lattice over d risky assets.

    Action 0 is always all-cash; enumeration order is lexicographic in the
    integer lattice coordinates, which fixes the argmax tie-break.
    """

    actions: np.ndarray  # [J x d]
    mesh: float

    @property
    def n_actions(self) -> int:
        return self.actions.shape[0]

    @property
    def n_assets(self) -> int:
        return self.actions.shape[1]


def enumerate_grid(d: int, mesh: float) -> ControlGrid:
    """All weight vectors with entries in {0, mesh, 2*mesh, ...} summing to <= 1."""
    if d < 1:
        raise ValueError("need at least one asset")
    k = round(1.0 / mesh)
    if abs(k * mesh - 1.0) > 1e-12:
        raise ValueError(f"mesh {mesh} does not divide 1")
    actions = [
        np.asarray(combo, dtype=float) * mesh
        for combo in itertools.product(range(k + 1), repeat=d)
        if sum(combo) <= k
    ]
    return ControlGrid(actions=np.asarray(actions), mesh=float(mesh))


def randomize_controls(m_paths: int, n_periods: int, d: int, seed: int) -> np.ndarray:
    """Uniform draws from the constraint simplex {a >= 0, sum(a) <= 1}, [M x N x d].

    Sampling is Dirichlet(1,...,1) over d+1 coordinates (the last being the
    cash slack), i.e. the flat distribution on the simplex with slack; each
    risky component then has mean 1/(d+1).
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    g = rng.standard_gamma(1.0, size=(m_paths, n_periods, d + 1))
    return g[..., :d] / g.sum(axis=-1, keepdims=True)


def step_wealth(w, prev_weights, new_weights, excess_return, rf: float, cost: CostSpec):
    """One-period wealth update: cost charged on turnover, then returns accrue.

    w' = w * (1 - c * sum|new - prev|) * (rf + new . excess); nonpositive
    results clamp to 1e-12 (counted in ``wealth_clamps``).
    """
    prev_weights = np.asarray(prev_weights, dtype=float)
    new_weights = np.asarray(new_weights, dtype=float)
    excess_return = np.asarray(excess_return, dtype=float)
    turnover = np.abs(new_weights - prev_weights).sum(axis=-1)
    growth = rf + (new_weights * excess_return).sum(axis=-1)
    out = np.asarray(w, dtype=float) * (1.0 - cost.proportional_rate * turnover) * growth
    n_bad = int(np.count_nonzero(out <= 0.0))
    if n_bad:
        wealth_clamps.count += n_bad
        out = np.maximum(out, _WEALTH_CLAMP)
    return float(out) if np.ndim(out) == 0 else out


def simulate_endogenous_wealth(
    scenarios: ScenarioSet, controls: np.ndarray, cost: CostSpec
) -> np.ndarray:
    """Forward wealth under the given per-path controls, [M x (N+1)], W0 = 1.

    Initial holdings are all-cash, so the first allocation pays full cost.
    """
    m, n, d = controls.shape
    if (m, n, d) != scenarios.excess_returns.shape:
        raise ValueError("controls shape does not match scenarios")
    wealth = np.empty((m, n + 1))
    wealth[:, 0] = 1.0
    prev = np.zeros((m, d))
    for t in range(n):
        wealth[:, t + 1] = step_wealth(
            wealth[:, t], prev, controls[:, t], scenarios.excess_returns[:, t],
            scenarios.risk_free_gross, cost,
        )
        prev = controls[:, t]
    return wealth


def stop_profit_check(w, n: int, target: TargetRange, rf: float, horizon: int):
    """True where w already funds the upper target risk-free: w >= U * rf^-(N-n)."""
    if not math.isfinite(target.upper):
        return np.zeros(np.shape(w), dtype=bool) if np.ndim(w) else False
    threshold = target.upper * rf ** (-(horizon - n))
    out = np.asarray(w, dtype=float) >= threshold
    return bool(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SolverOptions:
    """Mode and switches for backward_induction."""

    mode: RegressionMode = RegressionMode.TWO_STAGE_CONST_SIGMA
    stop_profit: bool = True
    control_seed: int | None = None  # default: scenario seed + 1
    n_gh_nodes: int = 128  # Gauss-Hermite nodes for CRRA continuation values
    benchmark: str | None = None  # series name for RELATIVE_* objectives


@dataclass
class Policy:
    """Complete set of per-(time, action) continuation-value models."""

    models: list[list[FittedContinuation]]  # [N][J]
    grid: ControlGrid
    objective: TargetRange | CrraParams
    basis: BasisSpec
    mode: RegressionMode
    stop_profit_enabled: bool
    horizon: int
    risk_free_gross: float
    v0_estimate: float
    benchmark: str | None = None
    n_gh_nodes: int = 128


def _stop_profit_effective(objective, options: SolverOptions) -> bool:
    return (
        options.stop_profit
        and isinstance(objective, TargetRange)
        and not objective.kind.is_relative
        and math.isfinite(objective.upper)
    )


def _payoff_values(objective, terminal: np.ndarray) -> np.ndarray:
    """Terminal payoff; for RELATIVE kinds ``terminal`` is already the excess."""
    if isinstance(objective, CrraParams):
        return crra_utility(terminal, objective)
    if objective.kind.is_skewed:
        return strs_payoff(terminal, replace(objective, kind=RangeKind.STRS))
    return ftrs_payoff(terminal, replace(objective, kind=RangeKind.FTRS))


def _cv_matrix(objective, mu: np.ndarray, sigma, n_gh_nodes: int) -> np.ndarray:
    """Continuation values from Gaussian forecasts; mu [M x J], sigma scalar/[J]/[M x J]."""
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), mu.shape)
    if isinstance(objective, CrraParams):
        return crra_cv_nodes(mu, sigma, objective.gamma, n_gh_nodes)
    if objective.kind.is_skewed:
        return strs_cv(mu, sigma, objective.lower, objective.upper)
    return ftrs_cv(mu, sigma, objective.lower, objective.upper)


class _ContinuationEvaluator:
    """Evaluates the per-action CV matrix from fitted models at one time index."""

    def __init__(self, policy_like):
        self.objective = policy_like.objective
        self.basis = policy_like.basis
        self.mode = policy_like.mode
        self.n_gh_nodes = policy_like.n_gh_nodes
        self.actions = policy_like.grid.actions

    def values(self, models: list[FittedContinuation], z: np.ndarray, w: np.ndarray) -> np.ndarray:
        """CV matrix [M x J] at states (z rows, wealth w)."""
        x = build_features(z, w, self.basis)
        beta = np.column_stack([m.beta for m in models])
        mu = x @ beta
        if self.mode is RegressionMode.CLASSICAL_DIRECT:
            if isinstance(self.objective, CrraParams):
                util = crra_utility(w, self.objective)
                mu = mu + util[:, None] * np.column_stack([m.eta for m in models])
            return mu
        if self.mode is RegressionMode.TWO_STAGE_STATE_SIGMA:
            sigma = np.column_stack(
                [m.scale(build_features(z, w, m.sigma_basis)) for m in models]
            )
        else:
            sigma = np.asarray([m.sigma_const for m in models])
        return _cv_matrix(self.objective, mu, sigma, self.n_gh_nodes)


def _fit_action(
    mode: RegressionMode,
    objective,
    features: np.ndarray,
    terminal: np.ndarray,
    basis: BasisSpec,
    n: int,
    j: int,
    wealth_col,
) -> FittedContinuation:
    """Fit one (time, action) continuation model on recomputed terminal values."""
    try:
        if mode is RegressionMode.CLASSICAL_DIRECT:
            payoff = _payoff_values(objective, terminal)
            if isinstance(objective, CrraParams):
                # utility-augmented basis: one extra column u(w) whose
                # coefficient is stored in eta
                util = crra_utility(wealth_col, objective)
                fit = fit_ols(np.column_stack([features, util]), payoff)
                return FittedContinuation(
                    beta=fit.beta[:-1], basis=basis, mode=mode, action_index=j,
                    time_index=n, eta=np.asarray([fit.beta[-1]]),
                )
            fit = fit_ols(features, payoff)
            return FittedContinuation(
                beta=fit.beta, basis=basis, mode=mode, action_index=j, time_index=n
            )
        fit = fit_ols(features, terminal)
        if mode is RegressionMode.TWO_STAGE_STATE_SIGMA:
            sigma_basis = basis
            psi = features
            init = np.zeros(psi.shape[1])
            init[0] = math.log(max(fit.sigma, 1e-12))
            if fit.sigma < 1e-8 * max(1.0, float(np.mean(np.abs(terminal)))):
                # near-deterministic continuation: the likelihood in eta is
                # unbounded below, so keep the constant scale
                eta = init
            else:
                eta = fit_log_sigma_mle(psi, fit.residuals, init)
            return FittedContinuation(
                beta=fit.beta, basis=basis, mode=mode, action_index=j, time_index=n,
                sigma_const=fit.sigma, eta=eta, sigma_basis=sigma_basis,
            )
        return FittedContinuation(
            beta=fit.beta, basis=basis, mode=mode, action_index=j, time_index=n,
            sigma_const=fit.sigma,
        )
    except (FitError, ValueError) as exc:
        raise SolverError(f"regression failed at time {n}, action {j}: {exc}") from exc


def recompute_to_horizon(
    scenarios: ScenarioSet,
    models_after: list[list[FittedContinuation]],
    evaluator: _ContinuationEvaluator,
    n: int,
    action: np.ndarray,
    w_start: np.ndarray,
    prev_weights: np.ndarray,
    cost: CostSpec,
    stop_profit_enabled: bool,
    benchmark_wealth: np.ndarray | None = None,
) -> np.ndarray:
    """Terminal regression target after applying ``action`` at time n.

    Applies the fixed action at t_n, then at each later decision time the
    argmax over the already-fitted models (lowest index on ties), charging
    turnover costs throughout.  Paths that hit the stop-profit threshold
    lock at exactly the upper target.  For RELATIVE objectives the returned
    target is terminal wealth minus the benchmark's terminal wealth.
    """
    horizon = scenarios.n_periods
    rf = scenarios.risk_free_gross
    objective = evaluator.objective
    m = scenarios.n_paths
    w = np.asarray(w_start, dtype=float).copy()
    locked = np.zeros(m, dtype=bool)
    if stop_profit_enabled:
        locked = stop_profit_check(w, n, objective, rf, horizon)
    active = ~locked
    w = np.where(locked, objective.upper if stop_profit_enabled else 0.0, w)
    # fixed action at t_n for still-active paths
    if np.any(active):
        w[active] = step_wealth(
            w[active], prev_weights[active], action,
            scenarios.excess_returns[active, n], rf, cost,
        )
    prev = np.tile(np.asarray(action, dtype=float), (m, 1))
    for t in range(n + 1, horizon):
        if stop_profit_enabled and np.any(active):
            hit = active & stop_profit_check(w, t, objective, rf, horizon)
            if np.any(hit):
                w[hit] = objective.upper
                active &= ~hit
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        cv = evaluator.values(models_after[t], scenarios.predictors[idx, t], w[idx])
        chosen = evaluator.actions[np.argmax(cv, axis=1)]
        w[idx] = step_wealth(
            w[idx], prev[idx], chosen, scenarios.excess_returns[idx, t], rf, cost
        )
        prev[idx] = chosen
    if isinstance(objective, TargetRange) and objective.kind.is_relative:
        return w - benchmark_wealth[:, horizon]
    return w


def backward_induction(
    scenarios: ScenarioSet,
    grid: ControlGrid,
    objective: TargetRange | CrraParams,
    basis: BasisSpec,
    cost: CostSpec = CostSpec(),
    options: SolverOptions = SolverOptions(),
) -> Policy:
    """Solve the dynamic program by per-action regression, N-1 down to 0.

    For each time and action: recompute terminal wealth on all paths under
    (fixed action now, fitted argmax later), then regress.  Two-stage modes
    regress raw terminal wealth and convert (mu, sigma) to the payoff's
    closed-form expectation; classical mode regresses the payoff directly.
    """
    if isinstance(objective, TargetRange) and objective.kind.is_relative and options.benchmark is None:
        raise ValueError("RELATIVE objectives need options.benchmark")
    m, horizon, d = scenarios.excess_returns.shape
    if grid.n_assets != d:
        raise ValueError("grid asset count does not match scenarios")
    control_seed = options.control_seed if options.control_seed is not None else scenarios.seed + 1
    controls = randomize_controls(m, horizon, d, control_seed)
    forward_wealth = simulate_endogenous_wealth(scenarios, controls, cost)
    stop_enabled = _stop_profit_effective(objective, options)
    bench = (
        scenarios.benchmark_wealth(options.benchmark)
        if isinstance(objective, TargetRange) and objective.kind.is_relative
        else None
    )
    policy = Policy(
        models=[[] for _ in range(horizon)],
        grid=grid,
        objective=objective,
        basis=basis,
        mode=options.mode,
        stop_profit_enabled=stop_enabled,
        horizon=horizon,
        risk_free_gross=scenarios.risk_free_gross,
        v0_estimate=math.nan,
        benchmark=options.benchmark,
        n_gh_nodes=options.n_gh_nodes,
    )
    evaluator = _ContinuationEvaluator(policy)
    for n in range(horizon - 1, -1, -1):
        prev_weights = controls[:, n - 1] if n > 0 else np.zeros((m, d))
        w_n = forward_wealth[:, n]
        features = build_features(scenarios.predictors[:, n], w_n, basis)
        for j in range(grid.n_actions):
            terminal = recompute_to_horizon(
                scenarios, policy.models, evaluator, n, grid.actions[j],
                w_n, prev_weights, cost, stop_enabled, bench,
            )
            policy.models[n].append(
                _fit_action(options.mode, objective, features, terminal, basis, n, j, w_n)
            )
    z0 = scenarios.predictors[:1, 0]
    cv0 = evaluator.values(policy.models[0], z0, np.asarray([1.0]))
    policy.v0_estimate = float(np.max(cv0))
    return policy


def policy_action(policy: Policy, z, w, n: int) -> int:
    """Argmax action index at state (z, w, n); stop-profit supersedes with all-cash."""
    if not (0 <= n < policy.horizon):
        raise ValueError(f"time index {n} outside [0, {policy.horizon})")
    if policy.stop_profit_enabled and stop_profit_check(
        float(w), n, policy.objective, policy.risk_free_gross, policy.horizon
    ):
        return 0
    evaluator = _ContinuationEvaluator(policy)
    cv = evaluator.values(
        policy.models[n], np.asarray(z, dtype=float).reshape(1, -1), np.asarray([float(w)])
    )
    return int(np.argmax(cv[0]))


def _objective_dict(objective) -> dict:
    if isinstance(objective, CrraParams):
        return {"family": "crra", "gamma": objective.gamma}
    return {
        "family": "range",
        "kind": objective.kind.value,
        "lower": objective.lower,
        "upper": None if math.isinf(objective.upper) else objective.upper,
    }


def _objective_from_dict(d: dict):
    if d["family"] == "crra":
        return CrraParams(gamma=d["gamma"])
    upper = math.inf if d["upper"] is None else d["upper"]
    return TargetRange(lower=d["lower"], upper=upper, kind=RangeKind(d["kind"]))


def save_policy(path, policy: Policy) -> None:
    """Serialize a Policy to .npz with a JSON header; round-trip is bit-exact."""
    header = {
        "format_version": FORMAT_VERSION,
        "objective": _objective_dict(policy.objective),
        "basis": {
            "degree": policy.basis.degree,
            "include_wealth": policy.basis.include_wealth,
            "predictor_subset": list(policy.basis.predictor_subset)
            if policy.basis.predictor_subset is not None
            else None,
            "cross_terms": policy.basis.cross_terms,
        },
        "mode": policy.mode.value,
        "stop_profit_enabled": policy.stop_profit_enabled,
        "horizon": policy.horizon,
        "mesh": policy.grid.mesh,
        "benchmark": policy.benchmark,
        "n_gh_nodes": policy.n_gh_nodes,
    }
    arrays = {
        "header": np.asarray(json.dumps(header)),
        "actions": policy.grid.actions,
        "risk_free_gross": np.asarray(policy.risk_free_gross),
        "v0_estimate": np.asarray(policy.v0_estimate),
        "beta": np.asarray([[m.beta for m in row] for row in policy.models]),
    }
    sigmas = [
        [m.sigma_const if m.sigma_const is not None else math.nan for m in row]
        for row in policy.models
    ]
    arrays["sigma_const"] = np.asarray(sigmas)
    if any(m.eta is not None for row in policy.models for m in row):
        arrays["eta"] = np.asarray(
            [[m.eta if m.eta is not None else [math.nan] for m in row] for row in policy.models]
        )
    np.savez(path, **arrays)


def load_policy(path) -> Policy:
    with np.load(path, allow_pickle=False) as z:
        header = json.loads(str(z["header"]))
        if header["format_version"] != FORMAT_VERSION:
            raise ValueError(f"unsupported policy format version {header['format_version']}")
        basis_d = header["basis"]
        basis = BasisSpec(
            degree=basis_d["degree"],
            include_wealth=basis_d["include_wealth"],
            predictor_subset=tuple(basis_d["predictor_subset"])
            if basis_d["predictor_subset"] is not None
            else None,
            cross_terms=basis_d["cross_terms"],
        )
        mode = RegressionMode(header["mode"])
        beta = z["beta"]
        sigma_const = z["sigma_const"]
        eta = z["eta"] if "eta" in z.files else None
        horizon = header["horizon"]
        models: list[list[FittedContinuation]] = []
        for n in range(horizon):
            row = []
            for j in range(beta.shape[1]):
                sc = float(sigma_const[n, j])
                row.append(
                    FittedContinuation(
                        beta=beta[n, j].copy(),
                        basis=basis,
                        mode=mode,
                        action_index=j,
                        time_index=n,
                        sigma_const=None if math.isnan(sc) else sc,
                        eta=eta[n, j].copy() if eta is not None else None,
                        sigma_basis=basis if mode is RegressionMode.TWO_STAGE_STATE_SIGMA else None,
                    )
                )
            models.append(row)
        return Policy(
            models=models,
            grid=ControlGrid(actions=z["actions"].copy(), mesh=header["mesh"]),
            objective=_objective_from_dict(header["objective"]),
            basis=basis,
            mode=mode,
            stop_profit_enabled=header["stop_profit_enabled"],
            horizon=horizon,
            risk_free_gross=float(z["risk_free_gross"]),
            v0_estimate=float(z["v0_estimate"]),
            benchmark=header["benchmark"],
            n_gh_nodes=header["n_gh_nodes"],
        )
