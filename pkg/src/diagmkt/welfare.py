"""Welfare-loss formulas: totals, Bayesian/bias decomposition, tax variants, derivatives.

Welfare loss versus the first best splits pointwise into a "variance"
part, proportional to the squared gap between aggregate demand and the
first-best allocation, and a "dispersion" part from the cross-sectional
spread of trades:

    WL = (beta + gamma)/2 * E[(Dbar - D_fb)^2] + gamma/2 * alpha^2 / tau_eps

The first expectation is assembled exactly here: aggregate demand is a
linear function of the fundamental V and the supply noise S (after
substituting the price-implied posterior mean), so the expectation is a
quadratic form in two independent Gaussians plus a constant.  This one
code path covers the no-tax economy and both tax regimes, and is the
reference every closed-form display is tested against.
"""
from __future__ import annotations

from dataclasses import dataclass

from .equilibrium import dalpha_ddelta, dalpha_dtheta, solve_equilibrium
from .params import Bias, MarketParams, Regime, SolverSettings, TaxSpec


@dataclass(frozen=True)
class WelfareBreakdown:
    """Total loss and its split into the Bayesian-shaped part and the
    bias overshoot part (zero exactly when theta = 0)."""

    wl_total: float
    wl_bayes: float
    wl_diag: float


def _loss_from_loadings(
    params: MarketParams,
    alpha: float,
    eta: float,
    g: float,
    b: float,
) -> float:
    """Exact E[(Dbar - D_fb)^2]-based loss for demand loadings (alpha, eta, 1/g).

    Dbar = [mu_s + S + g*alpha*V + g*eta*E(V|p)] / (g + b) with
    E(V|p) = kappa*(V - S/(alpha*b)); D_fb = (V + mu_s + S)/(beta + gamma).
    Collapsing to coefficients on (1, V, S) makes the expectation exact.
    """
    W = params.beta + params.gamma
    X = g + b
    tau = params.tau0 + alpha * alpha * b * b * params.tau_s
    kappa = (tau - params.tau0) / tau

    d_const = params.mu_s / X
    if alpha > 0.0 and b > 0.0:
        d_v = (g * alpha + g * eta * kappa) / X
        d_s = (1.0 - g * eta * kappa / (alpha * b)) / X
    else:  # uninformative price: E(V|p) = 0
        d_v = g * alpha / X
        d_s = 1.0 / X
    c_const = params.mu_s / W - d_const
    c_v = 1.0 / W - d_v
    c_s = 1.0 / W - d_s
    gap_sq = c_const * c_const + c_v * c_v / params.tau0 + c_s * c_s / params.tau_s
    dispersion = alpha * alpha / params.tau_eps
    return 0.5 * W * gap_sq + 0.5 * params.gamma * dispersion


def wl_general(params: MarketParams, alpha: float, eta: float) -> float:
    """Welfare loss for arbitrary loadings (alpha, eta) with price loading 1/gamma.

    Closed form (no tax):

        WL = (1 - gamma alpha)^2 / (2 (beta+gamma) tau)
           + (1 - gamma alpha - gamma eta)^2 / (2 (beta+gamma)) * (1/tau0 - 1/tau)
           + gamma alpha^2 / (2 tau_eps),     tau = tau0 + alpha^2 beta^2 tau_s
    """
    W = params.beta + params.gamma
    tau = params.tau0 + alpha * alpha * params.beta**2 * params.tau_s
    wedge = 1.0 - params.gamma * alpha - params.gamma * eta
    return (
        0.5 * (1.0 - params.gamma * alpha) ** 2 / (W * tau)
        + 0.5 * wedge * wedge / W * (1.0 / params.tau0 - 1.0 / tau)
        + 0.5 * params.gamma * alpha * alpha / params.tau_eps
    )


def welfare_loss(
    params: MarketParams,
    bias: Bias,
    settings: SolverSettings = SolverSettings(),
) -> WelfareBreakdown:
    """Equilibrium welfare loss and its decomposition (no tax).

    Components use the closed forms

        wl_bayes = (1 - gamma alpha)^2 / (2 (beta+gamma) tau) + gamma alpha^2 / (2 tau_eps)
        wl_diag  = theta^2 / (2 (beta+gamma)) * (1/tau0 - 1/tau)

    while wl_total is assembled independently through the exact
    aggregate-demand moments, so the decomposition identity is a genuine
    cross-check rather than an arithmetic tautology.
    """
    eq = solve_equilibrium(params, bias, TaxSpec(), settings)
    W = params.beta + params.gamma
    wl_bayes = (
        0.5 * (1.0 - params.gamma * eq.alpha) ** 2 / (W * eq.tau)
        + 0.5 * params.gamma * eq.alpha**2 / params.tau_eps
    )
    wl_diag = 0.5 * bias.theta**2 / W * (1.0 / params.tau0 - 1.0 / eq.tau)
    wl_total = _loss_from_loadings(params, eq.alpha, eq.eta, eq.g, eq.b)
    return WelfareBreakdown(wl_total=wl_total, wl_bayes=wl_bayes, wl_diag=wl_diag)


def welfare_loss_tax(
    params: MarketParams,
    bias: Bias,
    tax: TaxSpec,
    settings: SolverSettings = SolverSettings(),
) -> float:
    """Equilibrium welfare loss under a quadratic tax/subsidy.

    The lump-sum rebate cancels the tax payments in the welfare measure,
    so the loss is the same exact-moment expression evaluated at the
    tax-distorted loadings.  At delta = 0 this equals welfare_loss(...)
    .wl_total for both regimes.
    """
    eq = solve_equilibrium(params, bias, tax, settings)
    return _loss_from_loadings(params, eq.alpha, eq.eta, eq.g, eq.b)


def dwl_dtheta(
    params: MarketParams,
    theta: float,
    settings: SolverSettings = SolverSettings(),
    method: str = "fd",
) -> float:
    """Derivative of the no-tax welfare loss in the bias.

    method="fd": central finite difference with step 1e-6*max(1, |theta|),
    clipped so the stencil stays inside theta > -1.  method="closed":
    chain rule through the loading,

        dWL/dtheta = (dWL_B/dalpha + dWL_D/dalpha) dalpha/dtheta + dWL_D/dtheta
    """
    if method == "fd":
        h = 1e-6 * max(1.0, abs(theta))
        h = min(h, 0.5 * (theta + 1.0 - 1e-9))
        up = welfare_loss(params, Bias(theta + h), settings).wl_total
        dn = welfare_loss(params, Bias(theta - h), settings).wl_total
        return (up - dn) / (2.0 * h)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    eq = solve_equilibrium(params, Bias(theta), TaxSpec(), settings)
    W = params.beta + params.gamma
    al, tau = eq.alpha, eq.tau
    b2ts = params.beta**2 * params.tau_s
    dbayes_dalpha = (
        -(1.0 - params.gamma * al) * (params.gamma * params.tau0 + al * b2ts) / (W * tau * tau)
        + params.gamma * al / params.tau_eps
    )
    ddiag_dalpha = theta * theta * al * b2ts / (W * tau * tau)
    ddiag_dtheta = theta / W * (1.0 / params.tau0 - 1.0 / tau)
    return (dbayes_dalpha + ddiag_dalpha) * dalpha_dtheta(eq, params) + ddiag_dtheta


def _dwl_ddelta_partials(params: MarketParams, theta: float, alpha: float, regime: Regime):
    """Partials of the taxed welfare loss at delta = 0, holding resp. varying alpha.

    Derived from the exact-moment loss written as WL = N / (2 W X^2) +
    gamma alpha^2 / (2 tau_eps), where X = W + 2 delta (both-sides) or
    W + delta (informed-only) and N collects the Gaussian moments.  Both
    are verified against finite differences in the test suite.
    """
    W = params.beta + params.gamma
    beta, gamma = params.beta, params.gamma
    t0, te, ts = params.tau0, params.tau_eps, params.tau_s
    tau = t0 + alpha * alpha * beta * beta * ts
    inv_gap = 1.0 / t0 - 1.0 / tau
    one_ga = 1.0 - gamma * alpha

    # common dWL/dalpha at delta = 0
    dwl_dalpha = (
        -(one_ga * (gamma * t0 + alpha * beta**2 * ts) - theta**2 * alpha * beta**2 * ts)
        / (W * tau * tau)
        + gamma * alpha / te
    )

    if regime is Regime.INFORMED_ONLY:
        dwl_ddelta = -alpha * beta * theta * (alpha * beta * (theta + 1.0) * ts - t0) / (
            t0 * W * W * tau
        )
        return dwl_ddelta, dwl_dalpha

    # both sides: N(delta) at fixed alpha, with b = beta + delta and X = W + 2 delta
    n_zero = W * W * one_ga * one_ga / tau + W * W * theta * theta * inv_gap
    dtau_ddelta = 2.0 * alpha * alpha * beta * ts
    n_prime = (
        W * W * (2.0 * one_ga * (-alpha) / tau - one_ga * one_ga * dtau_ddelta / (tau * tau))
        + 4.0 * W * one_ga * (1.0 + beta * alpha) / tau
        + W * W * theta * theta * dtau_ddelta / (tau * tau)
        - 4.0 * W * theta * (inv_gap - alpha * beta / tau)
    )
    dwl_ddelta = n_prime / (2.0 * W**3) - 2.0 * n_zero / W**4
    return dwl_ddelta, dwl_dalpha


def dwl_ddelta_at_zero(
    params: MarketParams,
    bias: Bias,
    regime: Regime,
    settings: SolverSettings = SolverSettings(),
    method: str = "closed",
) -> float:
    """Total small-tax welfare derivative d(WL)/d(delta) at delta = 0.

    method="closed" chains the delta/alpha partials with dalpha/ddelta;
    method="fd" takes a central finite difference of welfare_loss_tax.
    A negative value means a small tax is welfare improving.
    """
    if method == "fd":
        h = 1e-6
        up = welfare_loss_tax(params, bias, TaxSpec(h, regime), settings)
        dn = welfare_loss_tax(params, bias, TaxSpec(-h, regime), settings)
        return (up - dn) / (2.0 * h)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    eq = solve_equilibrium(params, bias, TaxSpec(0.0, regime), settings)
    d_delta, d_alpha = _dwl_ddelta_partials(params, bias.theta, eq.alpha, regime)
    return d_delta + d_alpha * dalpha_ddelta(eq, params, TaxSpec(0.0, regime))
