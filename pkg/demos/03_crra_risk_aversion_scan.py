"""Power-utility stability scan across risk aversion.

For power (CRRA) utility u(w) = w^(1-gamma) / (1-gamma), the payoff
becomes extremely convex as gamma grows: at gamma = 100 a few slightly-low
wealth paths dominate the sample mean, and a direct payoff regression fits
noise.  The two-stage route regresses well-behaved terminal wealth and
evaluates E[u] under the fitted Gaussian by quadrature, which stays stable.

This demo solves the same allocation problem for a range of gamma values
with both regression modes and several seeds, reporting the mean value
estimate and its seed-to-seed coefficient of variation.

Run:  python3 demos/03_crra_risk_aversion_scan.py
"""

import numpy as np

from targetrange import (
    BasisSpec,
    CostSpec,
    CrraParams,
    RegressionMode,
    SolverOptions,
    backward_induction,
    enumerate_grid,
    make_model,
    simulate_paths,
)
from targetrange.synthetic import SyntheticSpec

GAMMAS = (2.0, 10.0, 50.0, 100.0)
SEEDS = (0, 1, 2)
M_PATHS = 1500
HORIZON = 4

model = make_model(SyntheticSpec(n_assets=2, n_rows=360), seed=0)
grid = enumerate_grid(2, mesh=0.25)

print(f"{'gamma':>6} {'mode':>22} {'mean v0':>12} {'cv over seeds':>14}")
for gamma in GAMMAS:
    for mode in (RegressionMode.TWO_STAGE_CONST_SIGMA, RegressionMode.CLASSICAL_DIRECT):
        v0s = []
        for seed in SEEDS:
            scen = simulate_paths(model, M_PATHS, HORIZON, 0.02, seed=seed)
            policy = backward_induction(
                scen, grid, CrraParams(gamma), BasisSpec(degree=2),
                CostSpec(0.001), SolverOptions(mode=mode),
            )
            v0s.append(policy.v0_estimate)
        v0s = np.asarray(v0s)
        cv = float(np.std(v0s, ddof=1) / abs(np.mean(v0s)))
        print(f"{gamma:>6g} {mode.value:>22} {np.mean(v0s):>12.5g} {cv:>13.1%}")
    print()

print("Two-stage value estimates stay tight at every gamma; the direct")
print("regression's dispersion blows up once gamma reaches the 50-100 range.")
