import csv
import io
import json

import numpy as np
import pytest

from diagmkt import (
    Bias,
    MarketParams,
    Regime,
    SimConfig,
    TaxSpec,
    first_best_demand,
    mc_posterior_check,
    mc_price_regression,
    mc_var_p,
    mc_welfare_loss,
    price_stats,
    simulate_market,
    solve_equilibrium,
    welfare_loss,
    welfare_loss_tax,
    wl_general,
)
from diagmkt import montecarlo
from diagmkt._kernels import _sim_reps_numpy, sim_reps

QUICK = SimConfig(n_agents=400, n_reps=20_000, seed=7)


@pytest.fixture(scope="module")
def fig1b_run(fig1b_params):
    eq = solve_equilibrium(fig1b_params, Bias(0.0))
    return simulate_market(fig1b_params, Bias(0.0), TaxSpec(), eq, QUICK), eq


def test_config_invariants():
    with pytest.raises(ValueError):
        SimConfig(n_agents=50, n_reps=5000)
    with pytest.raises(ValueError):
        SimConfig(n_agents=500, n_reps=500)
    with pytest.raises(ValueError):
        SimConfig(n_agents=500, n_reps=1001, antithetic=True)


def test_bit_identical_reruns(fig1b_params):
    eq = solve_equilibrium(fig1b_params, Bias(0.3))
    config = SimConfig(n_agents=200, n_reps=2000, seed=123)
    first = simulate_market(fig1b_params, Bias(0.3), TaxSpec(), eq, config)
    second = simulate_market(fig1b_params, Bias(0.3), TaxSpec(), eq, config)
    for name in ("V", "S", "p", "d_bar", "welfare", "loss", "signal_var"):
        np.testing.assert_array_equal(getattr(first, name), getattr(second, name))
    # a different seed must change the draws
    third = simulate_market(fig1b_params, Bias(0.3), TaxSpec(), eq,
                            SimConfig(n_agents=200, n_reps=2000, seed=124))
    assert not np.array_equal(first.V, third.V)


def test_backends_agree(fig1b_params):
    """The jitted kernel and the numpy fallback produce the same streams."""
    args = (99, 500, 301, False, 1.3, 0.7, 2.1)
    a = sim_reps(*args)
    b = _sim_reps_numpy(*args)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-14)


def test_welfare_loss_within_three_se(fig1b_run, fig1b_params):
    result, _ = fig1b_run
    est = mc_welfare_loss(result)
    analytic = welfare_loss(fig1b_params, Bias(0.0)).wl_total
    assert abs(est.estimate - analytic) < 3 * est.standard_error


def test_price_regression_recovers_coefficients(fig1b_run):
    result, eq = fig1b_run
    reg = mc_price_regression(result)
    for key, target in (("intercept", eq.A), ("on_value", eq.B), ("on_supply_noise", -eq.C)):
        assert abs(reg[key].estimate - target) < 3 * reg[key].standard_error


def test_price_variance_and_posterior_slope(fig1b_run, fig1b_params):
    result, eq = fig1b_run
    var = mc_var_p(result)
    assert abs(var.estimate - price_stats(eq).var_p) < 3 * var.standard_error
    slope = mc_posterior_check(result, eq)
    assert abs(slope.estimate - eq.kappa) < 3 * slope.standard_error


def test_posterior_slope_with_near_perfect_price_signal():
    # tau_s -> infinity proxy: kappa stays bounded below 1 and the slope matches
    params = MarketParams(3.0, 2.0, 1.0, 5.0, 1e6)
    eq = solve_equilibrium(params, Bias(0.0))
    assert 0.99 < eq.kappa < 1.0
    result = simulate_market(params, Bias(0.0), TaxSpec(), eq, QUICK)
    slope = mc_posterior_check(result, eq)
    assert abs(slope.estimate - eq.kappa) < 3 * slope.standard_error


def test_posterior_slope_rises_with_bias(fig1b_params):
    slopes = {}
    for theta in (0.0, 1.0):
        eq = solve_equilibrium(fig1b_params, Bias(theta))
        result = simulate_market(fig1b_params, Bias(theta), TaxSpec(), eq, QUICK)
        slopes[theta] = mc_posterior_check(result, eq).estimate
        assert abs(slopes[theta] - eq.kappa) < 3e-2
    assert slopes[1.0] > slopes[0.0]


def test_high_signal_precision_collapses_dispersion():
    params = MarketParams(3.0, 2.0, 1.0, 1e9, 1.0)
    eq = solve_equilibrium(params, Bias(0.0))
    result = simulate_market(params, Bias(0.0), TaxSpec(), eq, QUICK)
    # signals collapse onto the value: dispersion term ~ alpha^2/tau_eps ~ 0
    assert float(np.mean(eq.alpha**2 * result.signal_var)) < 1e-8
    # and the finite-n price lands on the continuum pricing function
    assert np.allclose(result.p, eq.A + eq.B * result.V - eq.C * result.S, atol=1e-3)


def test_taxed_runs_match_analytic_loss(fig1b_params):
    for regime in Regime:
        tax = TaxSpec(0.1, regime)
        eq = solve_equilibrium(fig1b_params, Bias(0.0), tax)
        result = simulate_market(fig1b_params, Bias(0.0), tax, eq, QUICK)
        est = mc_welfare_loss(result)
        analytic = welfare_loss_tax(fig1b_params, Bias(0.0), tax)
        assert abs(est.estimate - analytic) < 3 * est.standard_error


def test_budget_balance_is_exact_per_replication(fig1b_params):
    for regime in Regime:
        tax = TaxSpec(0.25, regime)
        eq = solve_equilibrium(fig1b_params, Bias(0.4), tax)
        result = simulate_market(fig1b_params, Bias(0.4), tax, eq, QUICK)
        rebate = result.tax_revenue  # rebate equals collected revenue by construction
        net = result.welfare - result.tax_revenue + rebate
        np.testing.assert_allclose(net, result.welfare, rtol=1e-12)
        assert np.any(result.tax_revenue != 0.0)


def test_constant_demand_recovers_pure_variance_loss(fig1b_params):
    """With every demand forced to zero, the per-replication loss is pure
    variance, (beta+gamma)/2 * D_fb^2, and the estimator returns its mean."""
    params = fig1b_params
    rng = np.random.default_rng(5)
    n = 5000
    V = rng.normal(0, 1, n)
    S = rng.normal(0, 1, n)
    d_fb = first_best_demand(params, V, S)
    loss = 0.5 * (params.beta + params.gamma) * d_fb**2
    frozen = montecarlo.SimResult(
        config=SimConfig(n_agents=100, n_reps=n, seed=0), backend="test",
        parameters={}, V=V, S=S, p=np.zeros(n), d_bar=np.zeros(n),
        welfare=np.zeros(n), loss=loss, signal_var=np.zeros(n),
        tax_revenue=np.zeros(n),
    )
    est = mc_welfare_loss(frozen)
    assert est.estimate == pytest.approx(
        0.5 * (params.beta + params.gamma) * float(np.mean(d_fb**2)))


def test_welfare_identity_with_first_best(fig1b_params):
    """Per replication: realized loss (n-denominator dispersion) equals the
    first-best surplus minus realized surplus."""
    eq = solve_equilibrium(fig1b_params, Bias(0.2))
    config = SimConfig(n_agents=150, n_reps=1500, seed=44)
    result = simulate_market(fig1b_params, Bias(0.2), TaxSpec(), eq, config)
    params = fig1b_params
    d_fb = first_best_demand(params, result.V, result.S)
    w_fb = (params.mu_s + result.S - 0.5 * params.beta * d_fb) * d_fb \
        + result.V * d_fb - 0.5 * params.gamma * d_fb**2
    n = config.n_agents
    loss_n_denominator = result.loss - 0.5 * params.gamma * eq.alpha**2 \
        * result.signal_var * (1.0 - (n - 1) / n)
    np.testing.assert_allclose(w_fb - result.welfare, loss_n_denominator,
                               rtol=1e-9, atol=1e-12)


def test_standard_error_scales_with_reps(fig1b_params):
    eq = solve_equilibrium(fig1b_params, Bias(0.0))
    small = simulate_market(fig1b_params, Bias(0.0), TaxSpec(), eq,
                            SimConfig(n_agents=150, n_reps=4000, seed=9))
    large = simulate_market(fig1b_params, Bias(0.0), TaxSpec(), eq,
                            SimConfig(n_agents=150, n_reps=16000, seed=9))
    ratio = mc_welfare_loss(small).standard_error / mc_welfare_loss(large).standard_error
    assert ratio == pytest.approx(2.0, rel=0.2)


def test_antithetic_determinism_and_pairing(fig1b_params):
    eq = solve_equilibrium(fig1b_params, Bias(0.0))
    config = SimConfig(n_agents=150, n_reps=2000, seed=31, antithetic=True)
    result = simulate_market(fig1b_params, Bias(0.0), TaxSpec(), eq, config)
    np.testing.assert_array_equal(result.V[0::2], -result.V[1::2])
    est = mc_welfare_loss(result)
    analytic = welfare_loss(fig1b_params, Bias(0.0)).wl_total
    assert abs(est.estimate - analytic) < 4 * est.standard_error


def test_mc_matches_team_loss_at_balance(balanced_params):
    """theta = 0 at balanced externalities: market loss equals team loss."""
    params = balanced_params
    eq = solve_equilibrium(params, Bias(0.0))
    result = simulate_market(params, Bias(0.0), TaxSpec(), eq, QUICK)
    est = mc_welfare_loss(result)
    from diagmkt import team_loading

    a_team = team_loading(params)
    team_wl = wl_general(params, a_team, 1.0 / params.gamma - a_team)
    assert abs(est.estimate - team_wl) < 3 * est.standard_error


def test_csv_and_json_exports(fig1b_run, tmp_path):
    result, _ = fig1b_run
    csv_path = tmp_path / "reps.csv"
    result.to_csv(str(csv_path))
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:4] == ["rep", "V", "S", "p"]
    assert len(rows) == result.n_reps + 1
    assert float(rows[1][1]) == result.V[0]  # repr round-trips exactly

    json_path = tmp_path / "summary.json"
    result.summary_json(str(json_path))
    payload = json.loads(json_path.read_text())
    assert payload["config"]["n_reps"] == QUICK.n_reps
    assert payload["loss_mean"] == pytest.approx(mc_welfare_loss(result).estimate)
