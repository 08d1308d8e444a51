"""Linear-equilibrium solver: base-loading fixed point, pricing function, demand.

The market equilibrium is pinned down by a single scalar root.  With
effective curvature g (trade-cost curvature plus any tax on informed
traders) and effective supply slope b (supply slope plus any tax on
liquidity suppliers), the base loading a solves

    g * a = tau_eps / (tau_eps + tau0 + a^2 (1+theta)^2 b^2 tau_s)

The left side increases from 0 and the right side decreases, so the
positive root is unique.  Everything else in the equilibrium is a closed
form in that root.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePricing, NoConvergence
from .params import Bias, MarketParams, Regime, SolverSettings, TaxSpec

# Below this distance from theta = -1 the pricing function degenerates (B -> 0).
THETA_DEGENERATE_GAP = 1e-9


def effective_slopes(params: MarketParams, tax: TaxSpec) -> tuple[float, float]:
    """Effective (g, b): tax loads curvature always, supply slope only if both-sided."""
    g = params.gamma + tax.delta
    b = params.beta + (tax.delta if tax.regime is Regime.BOTH_SIDES else 0.0)
    return g, b


@dataclass(frozen=True)
class Equilibrium:
    """Solved loadings and pricing coefficients of the linear equilibrium.

    Demand schedule: D_i = alpha * s_i + eta * E[V|p] - eta_p * p, with
    E[V|p] = kappa * (p - A) / B.  Pricing function: p = A + B*V - C*S.
    tau is the public (prior + price-signal) precision.  g and b are the
    effective curvature and supply slope the object was solved under;
    tau0 and tau_s echo the precisions so price statistics need no extra
    context.
    """

    a: float
    alpha: float
    eta: float
    eta_p: float
    tau: float
    A: float
    B: float
    C: float
    kappa: float
    g: float
    b: float
    tau0: float
    tau_s: float


def _loading_residual(a: float, g: float, q: float, tau0: float, tau_eps: float) -> tuple[float, float]:
    """Residual g*a - tau_eps/(tau_eps + tau(a)) and its derivative; q = (1+theta)^2 b^2 tau_s."""
    tau = tau0 + a * a * q
    denom = tau_eps + tau
    r = g * a - tau_eps / denom
    dr = g + tau_eps * (2.0 * a * q) / (denom * denom)
    return r, dr


def solve_loading(
    params: MarketParams,
    bias: Bias = Bias(),
    tax: TaxSpec = TaxSpec(),
    settings: SolverSettings = SolverSettings(),
) -> float:
    """Unique positive root of the base-loading fixed point.

    Bracketed bisection refined by safeguarded Newton steps; bisection
    alone guarantees convergence on the monotone residual, Newton
    accelerates.  Raises NoConvergence only if max_iter is exhausted
    before the residual drops below abs_tol.
    """
    g, b = effective_slopes(params, tax)
    q = (1.0 + bias.theta) ** 2 * b * b * params.tau_s
    tau0, tau_eps = params.tau0, params.tau_eps

    lo = 0.0
    hi = min(1.0 / g, tau_eps / (g * tau0)) if tau0 > 0 else 1.0 / g
    r_hi, _ = _loading_residual(hi, g, q, tau0, tau_eps)
    if r_hi < 0.0:  # can only happen through rounding at the cap; widen once
        hi = 1.0 / g

    a = 0.5 * (lo + hi)
    for _ in range(settings.max_iter):
        r, dr = _loading_residual(a, g, q, tau0, tau_eps)
        if abs(r) < settings.abs_tol:
            return a
        if r > 0.0:
            hi = a
        else:
            lo = a
        step = a - r / dr
        a = step if lo < step < hi else 0.5 * (lo + hi)
    raise NoConvergence(
        f"loading fixed point did not reach |residual| < {settings.abs_tol} "
        f"in {settings.max_iter} iterations"
    )


def solve_equilibrium(
    params: MarketParams,
    bias: Bias = Bias(),
    tax: TaxSpec = TaxSpec(),
    settings: SolverSettings = SolverSettings(),
) -> Equilibrium:
    """Assemble the full linear equilibrium from the base-loading root.

    The pricing coefficients come from exact market clearing of the
    first-order-condition demands: with posterior weights w_s, w_p on the
    private and price signals,

        B = b (1+theta) (w_s + w_p) / (g + b),   C = B / (alpha b),
        A = -g mu_s / (g + b).

    The (w_s + w_p) factor damps the price response by the weight the
    prior retains in posterior beliefs; the ratio B/C = alpha*b, hence
    tau = tau0 + alpha^2 b^2 tau_s, is unaffected by it.  See
    DISCREPANCIES.md for the Monte Carlo evidence pinning down B and C.
    """
    if 1.0 + bias.theta <= THETA_DEGENERATE_GAP:
        raise DegeneratePricing(
            f"theta = {bias.theta} is within {THETA_DEGENERATE_GAP} of -1; price carries no information"
        )
    g, b = effective_slopes(params, tax)
    a = solve_loading(params, bias, tax, settings)
    one_plus = 1.0 + bias.theta
    alpha = a * one_plus
    tau = params.tau0 + alpha * alpha * b * b * params.tau_s
    kappa = (tau - params.tau0) / tau
    eta = one_plus / g - alpha
    eta_p = 1.0 / g
    w_sum = (params.tau_eps + tau - params.tau0) / (params.tau_eps + tau)
    A = -g * params.mu_s / (g + b)
    B = b * one_plus * w_sum / (g + b)
    # C = B/(alpha*b) generally; the b = 0 limit leaves supply vertical in
    # quantity and the price equal to -mu_s - S, i.e. B = 0, C = 1.
    C = B / (alpha * b) if b > 0.0 else 1.0
    return Equilibrium(
        a=a, alpha=alpha, eta=eta, eta_p=eta_p, tau=tau,
        A=A, B=B, C=C, kappa=kappa, g=g, b=b,
        tau0=params.tau0, tau_s=params.tau_s,
    )


def demand(eq: Equilibrium, s_i, p):
    """Trade quantity at signal s_i and price p.

    Evaluates alpha*s_i + (eta*kappa/B - eta_p)*p - eta*kappa*A/B, the
    regrouping shared by the analytic and finite-n paths.  Accepts
    scalars or numpy arrays.
    """
    if eq.B == 0.0:
        raise DegeneratePricing("B = 0: price carries no information, demand on price is undefined")
    slope = eq.eta * eq.kappa / eq.B
    return eq.alpha * np.asarray(s_i) + (slope - eq.eta_p) * np.asarray(p) - slope * eq.A


@dataclass(frozen=True)
class PriceStats:
    var_p: float
    price_precision: float


def price_stats(eq: Equilibrium) -> PriceStats:
    """Unconditional price variance B^2/tau0 + C^2/tau_s, and the precision
    of the price as a signal of the value, (B/C)^2 tau_s = tau - tau0."""
    var_p = eq.B * eq.B / eq.tau0 + eq.C * eq.C / eq.tau_s
    price_precision = eq.alpha**2 * eq.b**2 * eq.tau_s
    return PriceStats(var_p=var_p, price_precision=price_precision)


def dalpha_dtheta(eq: Equilibrium, params: MarketParams) -> float:
    """Closed-form derivative of the private-information loading in the bias.

    Implicit differentiation of the fixed point gives

        dalpha/dtheta = a / (1 + 2 (1 - gamma a) (tau - tau0) / tau) > 0

    Valid at delta = 0 (the no-tax equilibrium).
    """
    share = (eq.tau - params.tau0) / eq.tau
    return eq.a / (1.0 + 2.0 * (1.0 - params.gamma * eq.a) * share)


def dalpha_ddelta(eq: Equilibrium, params: MarketParams, tax: TaxSpec) -> float:
    """Closed-form derivative of the private-information loading in the tax.

    Implicit differentiation of the taxed fixed point.  Strictly negative:
    the tax always discourages trading on the private signal.
    """
    delta = eq.g - params.gamma
    al, g, b = eq.alpha, eq.g, eq.b
    te, t0, ts = params.tau_eps, params.tau0, params.tau_s
    if tax.regime is Regime.BOTH_SIDES:
        num = al * (al * al * b * ts * (params.beta + 2.0 * g + delta) + t0 + te)
    else:
        num = al * (t0 + te + al * al * b * b * ts)
    den = g * (3.0 * al * al * b * b * ts + t0 + te)
    return -num / den
