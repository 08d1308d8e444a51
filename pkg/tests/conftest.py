import numpy as np
import pytest

from diagmkt import MarketParams, externality_balance


@pytest.fixture(scope="session")
def fig1a_params():
    """Preset where the learning externality dominates (a* < a_team)."""
    return MarketParams(gamma=3.0, beta=0.1, tau0=0.01, tau_eps=0.01, tau_s=50.0)


@pytest.fixture(scope="session")
def fig1b_params():
    """Preset where the pecuniary externality dominates (a* > a_team)."""
    return MarketParams(gamma=3.0, beta=2.0, tau0=1.0, tau_eps=5.0, tau_s=1.0)


@pytest.fixture(scope="session")
def balanced_params(fig1b_params):
    """Economy tuned by bisection on tau_s until a* = a_team to ~1e-12.

    With the fig1b base economy the externality balance flips sign between
    tau_s = 10 (pecuniary) and tau_s = 30 (learning).
    """
    base = fig1b_params

    def gap(tau_s):
        bench = externality_balance(
            MarketParams(base.gamma, base.beta, base.tau0, base.tau_eps, tau_s))
        return bench.a_star - bench.a_team

    lo, hi = 10.0, 30.0
    g_lo = gap(lo)
    assert g_lo * gap(hi) < 0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if (gap(mid) > 0) == (g_lo > 0):
            lo = mid
        else:
            hi = mid
    tau_s = 0.5 * (lo + hi)
    params = MarketParams(base.gamma, base.beta, base.tau0, base.tau_eps, tau_s)
    assert abs(gap(tau_s)) < 1e-9
    return params


@pytest.fixture(scope="session")
def random_param_draws():
    """100 admissible parameter sets reused by the property suites."""
    rng = np.random.default_rng(20240817)

    def log_u(lo, hi):
        return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))

    return [
        MarketParams(
            gamma=log_u(0.2, 8.0),
            beta=log_u(0.05, 8.0),
            tau0=log_u(0.02, 20.0),
            tau_eps=log_u(0.02, 20.0),
            tau_s=log_u(0.02, 50.0),
            mu_s=float(rng.uniform(-1.0, 1.0)),
        )
        for _ in range(100)
    ]
