"""diagmkt: equilibrium, welfare, and tax policy in a market with over/under-reacting traders.

A library plus CLI that solves the linear market equilibrium in closed
form (loadings, pricing coefficients, welfare-loss decomposition,
comparative statics, thresholds, and optimal quadratic taxes) and
verifies every formula against a finite-agent Monte Carlo oracle.
"""

from .benchmark import Balance, BenchmarkReport, delta_fn, externality_balance, first_best_demand, team_loading
from .equilibrium import (
    Equilibrium,
    PriceStats,
    dalpha_ddelta,
    dalpha_dtheta,
    demand,
    effective_slopes,
    price_stats,
    solve_equilibrium,
    solve_loading,
)
from .errors import (
    DegenerateClearing,
    DegeneratePricing,
    DiagmktError,
    Infeasible,
    InvalidParameters,
    MultipleRoots,
    NoConvergence,
    NoRoot,
)
from .montecarlo import (
    MCEstimate,
    SimConfig,
    SimResult,
    mc_posterior_check,
    mc_price_regression,
    mc_var_p,
    mc_welfare_loss,
    simulate_market,
)
from .params import (
    NO_TAX,
    Bias,
    MarketParams,
    Regime,
    SolverSettings,
    TaxSpec,
    ValidationReport,
    params_as_dict,
    params_from_dict,
    require_valid,
    validate,
)
from .policy import (
    OptimumResult,
    PolicyReport,
    SweepTable,
    optimal_tax,
    optimal_theta,
    policy_report,
    sweep,
    threshold_delta_star,
    threshold_theta_private,
    threshold_theta_public,
)
from .welfare import (
    WelfareBreakdown,
    dwl_ddelta_at_zero,
    dwl_dtheta,
    welfare_loss,
    welfare_loss_tax,
    wl_general,
)

__version__ = "0.1.0"
