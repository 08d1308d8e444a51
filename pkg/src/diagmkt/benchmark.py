"""Efficiency benchmarks: first best, Bayesian market loading, team loading.

The sign of every welfare result downstream reduces to the comparison
between the Bayesian market loading a_star and the team (second-best)
loading a_team: a_star < a_team means the learning externality dominates,
a_star > a_team means the pecuniary externality does.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .equilibrium import solve_loading
from .errors import MultipleRoots, NoRoot
from .params import Bias, MarketParams, SolverSettings, TaxSpec

BALANCED_TOL = 1e-9


class Balance(enum.Enum):
    LEARNING_DOMINATES = "learning_dominates"
    PECUNIARY_DOMINATES = "pecuniary_dominates"
    BALANCED = "balanced"


@dataclass(frozen=True)
class BenchmarkReport:
    a_star: float
    a_team: float
    delta_fn_at_team: float
    balance: Balance


def first_best_demand(params: MarketParams, V, S):
    """Full-information allocation (V + mu_s + S) / (beta + gamma)."""
    return (np.asarray(V) + params.mu_s + np.asarray(S)) / (params.beta + params.gamma)


def _team_gap(a: float, params: MarketParams) -> tuple[float, float]:
    """Residual a*denominator - tau_eps of the team fixed point, and the denominator.

    tau(a) = tau0 + a^2 beta^2 tau_s
    Delta(a) = (1 - gamma a)^2 beta^2 tau_s tau_eps / (gamma tau(a))
    a_team = tau_eps / (gamma (tau + tau_eps) + beta tau - Delta)

    The multiplied-out residual is smooth everywhere (tau >= tau0 > 0), so a
    sign-change scan over it is safe even where the raw denominator vanishes.
    """
    g, b = params.gamma, params.beta
    tau = params.tau0 + a * a * b * b * params.tau_s
    delta_fn = (1.0 - g * a) ** 2 * b * b * params.tau_s * params.tau_eps / (g * tau)
    den = g * (tau + params.tau_eps) + b * tau - delta_fn
    return a * den - params.tau_eps, den


def delta_fn(a: float, params: MarketParams) -> float:
    """Wedge between team and market first-order conditions at loading a."""
    g, b = params.gamma, params.beta
    tau = params.tau0 + a * a * b * b * params.tau_s
    return (1.0 - g * a) ** 2 * b * b * params.tau_s * params.tau_eps / (g * tau)


def team_loading(params: MarketParams, settings: SolverSettings = SolverSettings()) -> float:
    """Loading a planner would impose when signals cannot be pooled.

    Scans a in (0, 10/gamma] for sign changes of the team fixed-point
    residual, then bisects.  Uniqueness is asserted, not assumed: more
    than one sign change raises MultipleRoots, none raises NoRoot (which
    is also how a near-vanishing fixed-point denominator manifests, since
    the root would then escape the scan range).
    """
    # The residual is -tau_eps at 0 and grows without bound, so a root always
    # exists; the scan range starts at 10/gamma and expands geometrically for
    # economies whose planner loading sits beyond it (small gamma, large wedge).
    a_max = 10.0 / params.gamma
    a_cap = 1e7 / params.gamma
    while True:
        grid = np.linspace(0.0, a_max, settings.scan_points + 1)
        vals = np.array([_team_gap(a, params)[0] for a in grid])
        signs = np.sign(vals)
        flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
        exact = np.nonzero(vals == 0.0)[0]
        if len(flips) + len(exact) > 0 or a_max >= a_cap:
            break
        a_max *= 4.0
    if len(flips) + len(exact) > 1:
        raise MultipleRoots(
            f"team fixed point has {len(flips) + len(exact)} candidate roots on (0, {a_max:g}]"
        )
    if len(exact) == 1:
        return float(grid[exact[0]])
    if len(flips) == 0:
        raise NoRoot(f"team fixed point has no sign change on (0, {a_max:g}]")

    lo, hi = float(grid[flips[0]]), float(grid[flips[0] + 1])
    f_lo = _team_gap(lo, params)[0]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid, den = _team_gap(mid, params)
        if den != 0.0 and abs(mid - params.tau_eps / den) < settings.abs_tol:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def externality_balance(
    params: MarketParams, settings: SolverSettings = SolverSettings()
) -> BenchmarkReport:
    """Compare the Bayesian market loading with the team loading."""
    a_star = solve_loading(params, Bias(0.0), TaxSpec(), settings)
    a_team = team_loading(params, settings)
    gap = a_star - a_team
    if abs(gap) < BALANCED_TOL * max(1.0, abs(a_team)):
        balance = Balance.BALANCED
    elif gap < 0.0:
        balance = Balance.LEARNING_DOMINATES
    else:
        balance = Balance.PECUNIARY_DOMINATES
    return BenchmarkReport(
        a_star=a_star,
        a_team=a_team,
        delta_fn_at_team=delta_fn(a_team, params),
        balance=balance,
    )
