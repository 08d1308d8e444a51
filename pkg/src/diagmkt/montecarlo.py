"""Finite-agent market simulation: the independent oracle for every closed form.

Each replication draws the fundamental, the supply noise, and n_agents
private signals, then clears the market exactly against the analytic
demand schedules.  The only gap between a replication and the continuum
theory is that the average signal differs from the fundamental by an
O(1/sqrt(n)) sampling error, so closed forms are recovered within
standard errors that shrink at the usual Monte Carlo rate.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from ._kernels import BACKEND, sim_reps
from .equilibrium import Equilibrium
from .errors import DegenerateClearing
from .params import Bias, MarketParams, Regime, TaxSpec, params_as_dict


@dataclass(frozen=True)
class SimConfig:
    """Simulation size, seed, and variance-reduction flag."""

    n_agents: int = 10_000
    n_reps: int = 100_000
    seed: int = 42
    antithetic: bool = False

    def __post_init__(self):
        if self.n_agents < 100:
            raise ValueError("n_agents must be at least 100")
        if self.n_reps < 1000:
            raise ValueError("n_reps must be at least 1000")
        if self.antithetic and self.n_reps % 2:
            raise ValueError("antithetic runs need an even n_reps")


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    standard_error: float
    note: str = ""


@dataclass
class SimResult:
    """Per-replication draws plus the config and parameters that produced them.

    welfare is the realized total surplus of the replication; loss is the
    per-replication welfare gap versus the first best, whose dispersion
    term uses the unbiased (n-1)-denominator sample variance.
    """

    config: SimConfig
    backend: str
    parameters: dict
    V: np.ndarray
    S: np.ndarray
    p: np.ndarray
    d_bar: np.ndarray
    welfare: np.ndarray
    loss: np.ndarray
    signal_var: np.ndarray
    tax_revenue: np.ndarray

    @property
    def n_reps(self) -> int:
        return len(self.V)

    def to_csv(self, target) -> None:
        """One row per replication, full round-trip float precision."""
        own = isinstance(target, (str, bytes))
        fh = open(target, "w", newline="", encoding="utf-8") if own else target
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rep", "V", "S", "p", "d_bar", "welfare", "loss",
                             "signal_var", "tax_revenue"])
            for i in range(self.n_reps):
                writer.writerow([
                    i, repr(float(self.V[i])), repr(float(self.S[i])),
                    repr(float(self.p[i])), repr(float(self.d_bar[i])),
                    repr(float(self.welfare[i])), repr(float(self.loss[i])),
                    repr(float(self.signal_var[i])), repr(float(self.tax_revenue[i])),
                ])
        finally:
            if own:
                fh.close()

    def summary(self) -> dict:
        loss = mc_welfare_loss(self)
        return {
            "config": {
                "n_agents": self.config.n_agents,
                "n_reps": self.config.n_reps,
                "seed": self.config.seed,
                "antithetic": self.config.antithetic,
            },
            "backend": self.backend,
            "parameters": self.parameters,
            "loss_mean": loss.estimate,
            "loss_se": loss.standard_error,
            "welfare_mean": float(self.welfare.mean()),
            "price_mean": float(self.p.mean()),
            "price_var": float(self.p.var(ddof=1)),
            "d_bar_mean": float(self.d_bar.mean()),
        }

    def summary_json(self, target) -> None:
        own = isinstance(target, (str, bytes))
        fh = open(target, "w", encoding="utf-8") if own else target
        try:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        finally:
            if own:
                fh.close()


def simulate_market(
    params: MarketParams,
    bias: Bias,
    tax: TaxSpec,
    eq: Equilibrium,
    config: SimConfig,
) -> SimResult:
    """Run the finite-agent market at a solved equilibrium.

    Per replication the clearing price solves

        p = -mu_s - S + b * (alpha*s_mean + (eta*kappa/B)*(p - A) - p/g)

    exactly, demands come from the analytic schedule, and the welfare
    terms follow the surplus definition with the quadratic tax rebated
    lump sum (so the rebate cancels from the loss identically).
    """
    if eq.B == 0.0:
        raise DegenerateClearing("price carries no information (B = 0); nothing to simulate")
    slope_ratio = eq.eta * eq.kappa / eq.B
    clear_coef = 1.0 + eq.b / eq.g - eq.b * slope_ratio
    if abs(clear_coef) < 1e-12:
        raise DegenerateClearing("market-clearing coefficient on the price is zero")

    V, S, eps_mean, eps_m2 = sim_reps(
        config.seed, config.n_reps, config.n_agents, config.antithetic,
        1.0 / np.sqrt(params.tau0), 1.0 / np.sqrt(params.tau_s),
        1.0 / np.sqrt(params.tau_eps),
    )
    n = config.n_agents
    s_mean = V + eps_mean
    signal_var = eps_m2 / (n - 1)

    p = (-params.mu_s - S + eq.b * eq.alpha * s_mean - eq.b * slope_ratio * eq.A) / clear_coef
    d_bar = eq.alpha * s_mean + slope_ratio * (p - eq.A) - p / eq.g
    d_fb = (V + params.mu_s + S) / (params.beta + params.gamma)

    # mean of D_i^2 across agents: D_i - Dbar = alpha (s_i - s_mean)
    mean_d_sq = d_bar**2 + eq.alpha**2 * eps_m2 / n
    welfare = (params.mu_s + S - 0.5 * params.beta * d_bar) * d_bar \
        + V * d_bar - 0.5 * params.gamma * mean_d_sq
    loss = 0.5 * (params.beta + params.gamma) * (d_bar - d_fb) ** 2 \
        + 0.5 * params.gamma * eq.alpha**2 * signal_var

    revenue = 0.5 * tax.delta * mean_d_sq
    if tax.regime is Regime.BOTH_SIDES:
        revenue = revenue + 0.5 * tax.delta * d_bar**2

    return SimResult(
        config=config,
        backend=BACKEND,
        parameters=params_as_dict(params, bias, tax),
        V=V, S=S, p=p, d_bar=d_bar, welfare=welfare, loss=loss,
        signal_var=signal_var, tax_revenue=revenue,
    )


def _mean_se(values: np.ndarray, antithetic: bool) -> tuple[float, float]:
    """Mean and its standard error; antithetic runs average pair means first."""
    if antithetic:
        values = 0.5 * (values[0::2] + values[1::2])
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(len(values)))
    return mean, se


def mc_welfare_loss(result: SimResult) -> MCEstimate:
    """Sample mean and standard error of the per-replication welfare loss."""
    mean, se = _mean_se(result.loss, result.config.antithetic)
    return MCEstimate(
        estimate=mean,
        standard_error=se,
        note="dispersion term uses the (n-1)-corrected sample variance across agents",
    )


def mc_posterior_check(result: SimResult, eq: Equilibrium) -> MCEstimate:
    """Through-the-origin regression of V on (p - A)/B; the slope estimates kappa."""
    z = (result.p - eq.A) / eq.B
    szz = float(np.dot(z, z))
    slope = float(np.dot(result.V, z) / szz)
    resid = result.V - slope * z
    se = float(np.sqrt(np.dot(resid, resid) / (len(z) - 1) / szz))
    return MCEstimate(estimate=slope, standard_error=se, note="compare against kappa")


def mc_price_regression(result: SimResult) -> dict[str, MCEstimate]:
    """OLS of the simulated price on (1, V, S); recovers (A, B, -C)."""
    X = np.column_stack([np.ones(result.n_reps), result.V, result.S])
    coef, *_ = np.linalg.lstsq(X, result.p, rcond=None)
    resid = result.p - X @ coef
    sigma_sq = float(np.dot(resid, resid) / (result.n_reps - X.shape[1]))
    cov = sigma_sq * np.linalg.inv(X.T @ X)
    ses = np.sqrt(np.diag(cov))
    names = ("intercept", "on_value", "on_supply_noise")
    return {
        name: MCEstimate(estimate=float(c), standard_error=float(s))
        for name, c, s in zip(names, coef, ses)
    }


def mc_var_p(result: SimResult) -> MCEstimate:
    """Sample variance of the simulated price with its (Gaussian) standard error."""
    var = float(result.p.var(ddof=1))
    se = var * np.sqrt(2.0 / (result.n_reps - 1))
    return MCEstimate(estimate=var, standard_error=float(se))
