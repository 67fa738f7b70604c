"""Multi-period portfolio optimization for target-range and CRRA objectives.

The solver estimates continuation values by regressing raw terminal wealth
on a polynomial state basis and applying the payoff's closed-form Gaussian
expectation (with a classical direct-payoff mode for comparison), over
scenarios bootstrapped from a calibrated VAR(1) market model.
"""

from .config import ConfigError, DataConfig, ObjectiveConfig, RunConfig
from .evaluate import (
    StatsReport,
    WealthDistribution,
    evaluate_policy,
    frontier,
    sensitivity_sweep,
    summarize,
)
from .market import (
    CalibrationError,
    IngestError,
    IngestOptions,
    ReturnsTable,
    ScenarioSet,
    VarModel,
    calibrate_var1,
    ingest_csv,
    load_scenarios,
    monthly_gross_rate,
    save_scenarios,
    simulate_paths,
)
from .objectives import (
    CrraParams,
    GaussianForecast,
    RangeKind,
    TargetRange,
    crra_continuation,
    crra_utility,
    ftrs_continuation,
    ftrs_payoff,
    relative_payoff,
    strs_continuation,
    strs_payoff,
)
from .pipeline import RunResult, solve_from_config
from .regression import (
    BasisSpec,
    FitError,
    FittedContinuation,
    RegressionMode,
    build_basis,
    build_features,
    fit_log_sigma_mle,
    fit_ols,
)
from .solver import (
    ControlGrid,
    CostSpec,
    Policy,
    SolverError,
    SolverOptions,
    backward_induction,
    enumerate_grid,
    load_policy,
    policy_action,
    randomize_controls,
    save_policy,
    simulate_endogenous_wealth,
    step_wealth,
    stop_profit_check,
)
from .specfun import (
    ConvergenceError,
    MomentQuery,
    gaussian_real_moment,
    kummer_1f1,
    tricomi_psi,
)
from .synthetic import SyntheticSpec, make_model, make_table

__version__ = "0.1.0"
