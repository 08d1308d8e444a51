import numpy as np
import pytest

import oracles
from diagmkt import (
    Balance,
    Bias,
    MarketParams,
    Regime,
    TaxSpec,
    delta_fn,
    dwl_ddelta_at_zero,
    dwl_dtheta,
    externality_balance,
    solve_equilibrium,
    solve_loading,
    welfare_loss,
    welfare_loss_tax,
    wl_general,
)


def test_wl_general_degenerate_cases():
    params = MarketParams(2.0, 1.0, 1.0, 4.0, 1.0)
    # gamma*alpha = 1 and eta = 0 kill both squared terms
    alpha = 1.0 / params.gamma
    expected = params.gamma * alpha**2 / (2 * params.tau_eps)
    assert wl_general(params, alpha, 0.0) == pytest.approx(expected, rel=1e-14)


def test_welfare_loss_cubic_case_frozen_value():
    """gamma=beta=tau0=tau_eps=tau_s=1, theta=0: hand-evaluable from the
    a^3+2a-1 root; value frozen from the independent transcription."""
    params = MarketParams(1.0, 1.0, 1.0, 1.0, 1.0)
    a = oracles.grid_scan_loading(1.0, 1.0, 1.0, 1.0, 1.0)
    expected, _, _ = oracles.lemma2_wl(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, a)
    got = welfare_loss(params, Bias(0.0))
    assert got.wl_total == pytest.approx(expected, rel=1e-10)
    assert got.wl_total == pytest.approx(0.16474177047924854, rel=1e-12)


def test_decomposition_identity_on_grid(random_param_draws):
    """wl_total (exact moments) = wl_bayes + wl_diag (closed forms)."""
    thetas = [-0.8, -0.3, 0.0, 0.4, 2.0, 8.0]
    for params in random_param_draws[:20]:
        for theta in thetas:
            got = welfare_loss(params, Bias(theta))
            assert got.wl_total == pytest.approx(
                got.wl_bayes + got.wl_diag, rel=1e-10, abs=1e-14)
            assert got.wl_bayes >= 0.0 and got.wl_diag >= 0.0


def test_diag_component_zero_iff_unbiased(fig1b_params):
    assert welfare_loss(fig1b_params, Bias(0.0)).wl_diag == 0.0
    for theta in (-1e-3, 1e-3, 0.5):
        assert welfare_loss(fig1b_params, Bias(theta)).wl_diag > 0.0


def test_breakdown_matches_independent_transcription(random_param_draws):
    for params in random_param_draws[:15]:
        for theta in (-0.5, 0.9):
            alpha = solve_equilibrium(params, Bias(theta)).alpha
            total, wl_b, wl_d = oracles.lemma2_wl(
                params.gamma, params.beta, params.tau0, params.tau_eps,
                params.tau_s, theta, alpha)
            got = welfare_loss(params, Bias(theta))
            assert got.wl_bayes == pytest.approx(wl_b, rel=1e-12)
            assert got.wl_diag == pytest.approx(wl_d, rel=1e-12)
            assert got.wl_total == pytest.approx(total, rel=1e-10)


def test_tax_loss_collapses_at_zero_delta(fig1a_params, fig1b_params):
    for params in (fig1a_params, fig1b_params):
        for theta in (-0.5, 0.0, 1.2):
            base = welfare_loss(params, Bias(theta)).wl_total
            for regime in Regime:
                taxed = welfare_loss_tax(params, Bias(theta), TaxSpec(0.0, regime))
                assert taxed == pytest.approx(base, rel=1e-12)


def test_tax_loss_matches_appendix_displays(fig1b_params, random_param_draws):
    """The exact-moment assembly agrees with the closed appendix displays
    for both regimes at machine precision."""
    cases = [(fig1b_params, 0.0, 0.1), (fig1b_params, 0.7, 0.25), (fig1b_params, -0.5, -0.3)]
    cases += [(p, 0.4, 0.2) for p in random_param_draws[:10]]
    for params, theta, delta in cases:
        for regime in ("both", "informed"):
            if regime == "both" and delta <= -params.beta:
                continue
            tax = TaxSpec(delta, Regime.parse(regime))
            eq = solve_equilibrium(params, Bias(theta), tax)
            display = oracles.taxed_wl_display(
                params.gamma, params.beta, params.tau0, params.tau_eps,
                params.tau_s, params.mu_s, theta, delta, regime, eq.alpha)
            got = welfare_loss_tax(params, Bias(theta), tax)
            assert got == pytest.approx(display, rel=1e-11)


def test_large_tax_volatility_term_dominates(fig1b_params):
    """For large delta the delta^2 (mu_s^2 + 1/tau_s + 1/tau0) term dominates
    and the loss increases."""
    params = MarketParams(3.0, 2.0, 1.0, 5.0, 1.0, mu_s=0.5)
    deltas = [1.0, 5.0, 50.0, 3000.0]
    losses = [welfare_loss_tax(params, Bias(0.0), TaxSpec(d, Regime.BOTH_SIDES))
              for d in deltas]
    assert np.all(np.diff(losses) > 0)
    W = params.beta + params.gamma
    cap = (params.mu_s**2 + 1 / params.tau_s + 1 / params.tau0) / (2 * W)
    # the volatility term alone converges to cap as delta -> infinity
    assert losses[-1] == pytest.approx(cap, rel=0.01)


def test_dwl_dtheta_sign_matches_balance(fig1a_params, fig1b_params):
    assert dwl_dtheta(fig1a_params, 0.0) < 0.0  # learning dominates: overreaction helps
    assert dwl_dtheta(fig1b_params, 0.0) > 0.0  # pecuniary dominates: it hurts
    assert dwl_dtheta(fig1a_params, 10.0) > 0.0
    assert dwl_dtheta(fig1b_params, 10.0) > 0.0


def test_dwl_dtheta_closed_matches_fd(fig1a_params, fig1b_params, random_param_draws):
    for params in [fig1a_params, fig1b_params] + random_param_draws[:10]:
        for theta in (-0.7, 0.0, 1.5):
            closed = dwl_dtheta(params, theta, method="closed")
            fd = dwl_dtheta(params, theta, method="fd")
            assert closed == pytest.approx(fd, rel=2e-5, abs=1e-12)


def test_dwl_dtheta_limits(random_param_draws):
    for params in random_param_draws[:20]:
        assert dwl_dtheta(params, 50.0) > 0.0
        assert dwl_dtheta(params, -0.99) < 0.0


def test_small_tax_derivative_closed_vs_fd(fig1a_params, fig1b_params, random_param_draws):
    for params in [fig1a_params, fig1b_params] + random_param_draws[:10]:
        for theta in (-0.5, 0.0, 2.0):
            for regime in Regime:
                closed = dwl_ddelta_at_zero(params, Bias(theta), regime)
                fd = dwl_ddelta_at_zero(params, Bias(theta), regime, method="fd")
                assert closed == pytest.approx(fd, rel=1e-5, abs=1e-11)


def test_small_tax_balanced_economy(balanced_params):
    """At theta = 0 with balanced externalities: informed-only derivative is
    zero; both-sides sign equals sign(alpha beta tau_s (alpha(beta+gamma)-1) + tau0)."""
    params = balanced_params
    scale = abs(welfare_loss(params, Bias(0.0)).wl_total)
    informed = dwl_ddelta_at_zero(params, Bias(0.0), Regime.INFORMED_ONLY)
    assert abs(informed) < 1e-6 * max(1.0, scale)
    both = dwl_ddelta_at_zero(params, Bias(0.0), Regime.BOTH_SIDES)
    alpha = solve_loading(params)
    marker = alpha * params.beta * params.tau_s * (alpha * (params.beta + params.gamma) - 1.0) \
        + params.tau0
    assert np.sign(both) == np.sign(marker)


def test_small_tax_extreme_bias_signs(fig1a_params, fig1b_params):
    for params in (fig1a_params, fig1b_params):
        for regime in Regime:
            assert dwl_ddelta_at_zero(params, Bias(20.0), regime) < 0.0
            assert dwl_ddelta_at_zero(params, Bias(-0.95), regime) > 0.0


def test_prop4_small_bias_sign_on_random_draws(random_param_draws):
    for params in random_param_draws[:25]:
        report = externality_balance(params)
        if abs(report.a_star - report.a_team) <= 1e-6:
            continue
        sign = np.sign(dwl_dtheta(params, 0.0))
        assert sign == np.sign(report.a_star - report.a_team)


def test_informed_only_small_tax_sign_is_balance_sign(random_param_draws):
    """Prop-7-style corollary: at theta = 0 the informed-only small-tax effect
    is improving exactly when the pecuniary externality dominates."""
    for params in random_param_draws[:15]:
        report = externality_balance(params)
        if abs(report.a_star - report.a_team) <= 1e-6:
            continue
        deriv = dwl_ddelta_at_zero(params, Bias(0.0), Regime.INFORMED_ONLY)
        improving = deriv < 0.0
        assert improving == (report.balance is Balance.PECUNIARY_DOMINATES)
