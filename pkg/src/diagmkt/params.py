"""Parameter containers, validation, and shared numeric settings.

Every quantity in the package is a pure function of these immutable inputs,
so values can be shared freely across threads and sweeps.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class Regime(enum.Enum):
    """Who pays the quadratic trade tax."""

    BOTH_SIDES = "both"
    INFORMED_ONLY = "informed"

    @classmethod
    def parse(cls, text: str) -> "Regime":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown regime {text!r}; expected 'both' or 'informed'")


@dataclass(frozen=True)
class MarketParams:
    """Exogenous economy: trade-cost curvature, supply slope, precisions.

    gamma   -- curvature of informed traders' quadratic transaction cost (> 0)
    beta    -- slope of the liquidity suppliers' inverse supply (> 0)
    tau0    -- prior precision of the asset value (> 0)
    tau_eps -- precision of each private signal (> 0)
    tau_s   -- precision of the supply noise (> 0)
    mu_s    -- constant shifter of the supply intercept (finite)
    """

    gamma: float
    beta: float
    tau0: float
    tau_eps: float
    tau_s: float
    mu_s: float = 0.0


@dataclass(frozen=True)
class Bias:
    """Strength of the updating bias: 0 Bayesian, > 0 overreaction, (-1, 0) underreaction."""

    theta: float = 0.0


@dataclass(frozen=True)
class TaxSpec:
    """Quadratic trade tax (negative = subsidy) and who it applies to."""

    delta: float = 0.0
    regime: Regime = Regime.BOTH_SIDES


NO_TAX = TaxSpec(0.0, Regime.BOTH_SIDES)


@dataclass(frozen=True)
class SolverSettings:
    """Numeric knobs; the fixed points are smooth scalar roots, so defaults over-resolve cheaply."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 200
    scan_points: int = 2048

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.scan_points < 16:
            raise ValueError("scan_points must be at least 16")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "ok" if self.ok else "invalid: " + "; ".join(self.violations)


def validate(params: MarketParams, bias: Bias = Bias(), tax: TaxSpec = NO_TAX) -> ValidationReport:
    """Check every domain invariant; returns a report and never raises.

    Pure and idempotent: equal inputs yield equal reports.  Anything this
    accepts is accepted by every downstream solver.
    """
    bad: list[str] = []
    for name in ("gamma", "beta", "tau0", "tau_eps", "tau_s"):
        value = getattr(params, name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            bad.append(f"{name} must be a finite positive number, got {value!r}")
    if not (isinstance(params.mu_s, (int, float)) and math.isfinite(params.mu_s)):
        bad.append(f"mu_s must be finite, got {params.mu_s!r}")
    if not (math.isfinite(bias.theta) and bias.theta > -1.0):
        bad.append("theta must exceed -1")
    if not math.isfinite(tax.delta):
        bad.append("delta must be finite")
    elif math.isfinite(params.gamma) and not tax.delta > -params.gamma:
        bad.append("delta must exceed -gamma")
    elif (
        tax.regime is Regime.BOTH_SIDES
        and math.isfinite(params.beta)
        and not tax.delta > -params.beta
    ):
        bad.append("delta must exceed -beta under a both-sides tax")
    return ValidationReport(tuple(bad))


def require_valid(params: MarketParams, bias: Bias = Bias(), tax: TaxSpec = NO_TAX) -> None:
    """Raise InvalidParameters when validate() reports violations."""
    from .errors import InvalidParameters

    report = validate(params, bias, tax)
    if not report.ok:
        raise InvalidParameters(report)


def params_as_dict(params: MarketParams, bias: Bias, tax: TaxSpec) -> dict:
    """Flat, JSON-ready view used by manifests and result echoes."""
    return {
        "gamma": params.gamma,
        "beta": params.beta,
        "tau0": params.tau0,
        "tau_eps": params.tau_eps,
        "tau_s": params.tau_s,
        "mu_s": params.mu_s,
        "theta": bias.theta,
        "delta": tax.delta,
        "regime": tax.regime.value,
    }


def params_from_dict(data: dict) -> tuple[MarketParams, Bias, TaxSpec]:
    params = MarketParams(
        gamma=float(data["gamma"]),
        beta=float(data["beta"]),
        tau0=float(data["tau0"]),
        tau_eps=float(data["tau_eps"]),
        tau_s=float(data["tau_s"]),
        mu_s=float(data.get("mu_s", 0.0)),
    )
    bias = Bias(float(data.get("theta", 0.0)))
    tax = TaxSpec(float(data.get("delta", 0.0)), Regime.parse(data.get("regime", "both")))
    return params, bias, tax
