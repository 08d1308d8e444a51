"""Threshold solvers, scalar optimizers, and sweep tables for the figures.

Thresholds exploit strict monotonicity of the loadings in their argument
(private loading increasing in the bias, decreasing in the tax; public
loading increasing in the bias), so each is a bracketed bisection with a
uniqueness assertion on a scan grid.  Optimizers bracket with a coarse
grid first -- the loss curves are smooth but not proven unimodal -- then
polish with golden-section search; grid-level multiplicity is reported,
never silently resolved.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .benchmark import Balance, externality_balance, team_loading
from .equilibrium import price_stats, solve_equilibrium
from .errors import Infeasible
from .params import Bias, MarketParams, Regime, SolverSettings, TaxSpec, validate
from .welfare import welfare_loss, welfare_loss_tax

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
THETA_SEARCH_LO = -0.999
THETA_SEARCH_HI = 10.0


@dataclass(frozen=True)
class OptimumResult:
    """Scalar minimizer with boundary/multiplicity diagnostics."""

    x: float
    fun: float
    boundary: bool
    multiple_minima: bool


@dataclass(frozen=True)
class PolicyReport:
    theta_prime: float
    theta_dprime: float
    delta_star: float | None
    theta_opt: OptimumResult
    tax_opt: OptimumResult
    balance: Balance


def _bisect_monotone(f, lo: float, hi: float, settings: SolverSettings, scan_check=None):
    """Root of a strictly monotone increasing f on [lo, hi] by bisection.

    When scan_check is given it receives the scan-grid values of f and can
    assert single-crossing before any bisection happens.
    """
    if scan_check is not None:
        xs = np.linspace(lo, hi, settings.scan_points)
        vals = np.array([f(x) for x in xs])
        scan_check(vals)
    f_lo = f(lo)
    x = 0.5 * (lo + hi)
    for _ in range(400):
        fx = f(x)
        if abs(fx) < settings.abs_tol:
            return x
        if (fx > 0.0) == (f_lo > 0.0):
            lo = x
        else:
            hi = x
        x = 0.5 * (lo + hi)
    return x


def _assert_single_crossing(vals: np.ndarray) -> None:
    signs = np.sign(vals[vals != 0.0])
    if np.count_nonzero(signs[:-1] != signs[1:]) > 1:
        raise Infeasible("scan grid shows more than one crossing where monotonicity was expected")


def _alpha_at_theta(params: MarketParams, theta: float, settings: SolverSettings) -> float:
    return solve_equilibrium(params, Bias(theta), TaxSpec(), settings).alpha


def _eta_at_theta(params: MarketParams, theta: float, settings: SolverSettings) -> float:
    return solve_equilibrium(params, Bias(theta), TaxSpec(), settings).eta


def threshold_theta_private(
    params: MarketParams, settings: SolverSettings = SolverSettings()
) -> float:
    """Bias level at which the private-information loading hits the team level.

    alpha(theta) increases strictly from 0 (theta -> -1) to infinity, so the
    root is unique; the bracket is expanded geometrically until it straddles.
    """
    target = team_loading(params, settings)
    return _solve_increasing_threshold(
        lambda th: _alpha_at_theta(params, th, settings) - target, settings
    )


def threshold_theta_public(
    params: MarketParams, settings: SolverSettings = SolverSettings()
) -> float:
    """Bias level at which the public-information loading hits the team level
    1/gamma - a_team; eta(theta) is strictly increasing from 0 to infinity."""
    target = 1.0 / params.gamma - team_loading(params, settings)
    return _solve_increasing_threshold(
        lambda th: _eta_at_theta(params, th, settings) - target, settings
    )


def _solve_increasing_threshold(gap, settings: SolverSettings) -> float:
    lo = THETA_SEARCH_LO
    if gap(lo) >= 0.0:
        # loading above target already at the lower edge: root sits between -1 and lo
        hi = lo
        lo = -1.0 + 1e-8  # stay above the degenerate-pricing guard
        if gap(lo) > 0.0:
            raise Infeasible("threshold collides with the theta -> -1 degeneracy")
    else:
        hi = 1.0
        while gap(hi) < 0.0:
            hi = 2.0 * hi + 1.0
            if hi > 1e6:
                raise Infeasible("loading never reaches the team level on the search range")
    return _bisect_monotone(gap, lo, hi, settings, scan_check=_assert_single_crossing)


def threshold_delta_star(
    params: MarketParams,
    bias: Bias,
    regime: Regime,
    settings: SolverSettings = SolverSettings(),
) -> float:
    """Tax level at which the private-information loading hits the team level.

    alpha(delta) decreases strictly, exploding as delta approaches -gamma.
    Under a both-sides tax the supply slope caps the feasible range at
    delta > -beta; if the loading cannot reach the team level before that
    wall, the threshold does not exist and Infeasible is raised.
    """
    target = team_loading(params, settings)
    lo_wall = max(-params.gamma, -params.beta) if regime is Regime.BOTH_SIDES else -params.gamma
    lo = lo_wall + max(1e-12, abs(lo_wall) * 1e-9)

    def gap(delta: float) -> float:
        eq = solve_equilibrium(params, bias, TaxSpec(delta, regime), settings)
        return target - eq.alpha  # increasing in delta

    if gap(lo) > 0.0:
        raise Infeasible(
            f"even at delta = {lo:g} the loading stays below the team level; "
            "the required tax would violate the feasible range"
        )
    hi = max(1.0, -2.0 * lo)
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise Infeasible("loading never falls to the team level on the search range")
    return _bisect_monotone(gap, lo, hi, settings, scan_check=_assert_single_crossing)


def _grid_then_golden(f, lo: float, hi: float, n_grid: int, tol: float = 1e-10) -> OptimumResult:
    """Coarse grid bracket, then golden-section polish to interval width tol."""
    xs = np.linspace(lo, hi, n_grid)
    ys = np.array([f(x) for x in xs])
    i_min = int(np.argmin(ys))
    interior = np.nonzero(
        (ys[1:-1] <= ys[:-2]) & (ys[1:-1] <= ys[2:])
    )[0]
    multiple = len(interior) > 1
    boundary = i_min in (0, n_grid - 1)

    a = xs[max(i_min - 1, 0)]
    b = xs[min(i_min + 1, n_grid - 1)]
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return OptimumResult(x=x, fun=f(x), boundary=boundary, multiple_minima=multiple)


def optimal_theta(
    params: MarketParams, settings: SolverSettings = SolverSettings()
) -> OptimumResult:
    """Bias level minimizing the no-tax welfare loss over (-0.999, 10]."""
    return _grid_then_golden(
        lambda th: welfare_loss(params, Bias(th), settings).wl_total,
        THETA_SEARCH_LO,
        THETA_SEARCH_HI,
        settings.scan_points,
    )


def optimal_tax(
    params: MarketParams,
    bias: Bias,
    regime: Regime,
    settings: SolverSettings = SolverSettings(),
) -> OptimumResult:
    """Tax level minimizing the taxed welfare loss over the feasible range.

    The lower edge is 0.999 * max(-gamma, -beta) for a both-sides tax
    (-gamma alone for informed-only); hits of either edge are flagged as
    boundary optima rather than errors, mirroring the feasibility
    truncation of the optimal-tax figure.
    """
    wall = max(-params.gamma, -params.beta) if regime is Regime.BOTH_SIDES else -params.gamma
    lo = 0.999 * wall
    hi = 10.0 * params.gamma
    return _grid_then_golden(
        lambda d: welfare_loss_tax(params, bias, TaxSpec(d, regime), settings),
        lo,
        hi,
        settings.scan_points,
    )


def policy_report(
    params: MarketParams,
    bias: Bias = Bias(),
    regime: Regime = Regime.BOTH_SIDES,
    settings: SolverSettings = SolverSettings(),
) -> PolicyReport:
    """All policy quantities in one pass; delta_star is None when infeasible."""
    bench = externality_balance(params, settings)
    try:
        delta_star = threshold_delta_star(params, bias, regime, settings)
    except Infeasible:
        delta_star = None
    return PolicyReport(
        theta_prime=threshold_theta_private(params, settings),
        theta_dprime=threshold_theta_public(params, settings),
        delta_star=delta_star,
        theta_opt=optimal_theta(params, settings),
        tax_opt=optimal_tax(params, bias, regime, settings),
        balance=bench.balance,
    )


SWEEP_COLUMNS = (
    "axis_value", "a", "alpha", "eta", "eta_p", "tau", "A", "B", "C",
    "var_p", "wl_total", "wl_bayes", "wl_diag", "dwl_daxis", "flag",
)


@dataclass
class SweepTable:
    axis: str
    grid: list[float]
    rows: list[dict] = field(default_factory=list)

    def to_csv(self, target) -> None:
        """Write the documented column schema; floats keep full round-trip precision."""
        own = isinstance(target, (str, bytes))
        fh = open(target, "w", newline="", encoding="utf-8") if own else target
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_COLUMNS)
            for row in self.rows:
                writer.writerow([_csv_cell(row.get(col)) for col in SWEEP_COLUMNS])
        finally:
            if own:
                fh.close()


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return value


def sweep(
    params: MarketParams,
    axis: str,
    grid,
    bias: Bias = Bias(),
    tax: TaxSpec = TaxSpec(),
    settings: SolverSettings = SolverSettings(),
) -> SweepTable:
    """Evaluate the equilibrium and welfare columns along a theta or delta grid.

    The grid must be strictly increasing.  Per-row failures are recorded
    in the row's flag column and the sweep continues.
    """
    grid = [float(x) for x in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("sweep grid must be strictly increasing")
    if axis not in ("theta", "delta"):
        raise ValueError(f"unknown sweep axis {axis!r}")

    table = SweepTable(axis=axis, grid=grid)
    for x in grid:
        row = {col: None for col in SWEEP_COLUMNS}
        row["axis_value"] = x
        row["flag"] = ""
        b_x = Bias(x) if axis == "theta" else bias
        t_x = tax if axis == "theta" else TaxSpec(x, tax.regime)
        report = validate(params, b_x, t_x)
        if not report.ok:
            row["flag"] = "InvalidParameters"
            table.rows.append(row)
            continue
        try:
            eq = solve_equilibrium(params, b_x, t_x, settings)
            stats = price_stats(eq)
            row.update(
                a=eq.a, alpha=eq.alpha, eta=eq.eta, eta_p=eq.eta_p, tau=eq.tau,
                A=eq.A, B=eq.B, C=eq.C, var_p=stats.var_p,
            )
            if t_x.delta == 0.0:
                breakdown = welfare_loss(params, b_x, settings)
                row.update(
                    wl_total=breakdown.wl_total,
                    wl_bayes=breakdown.wl_bayes,
                    wl_diag=breakdown.wl_diag,
                )
            else:
                row["wl_total"] = welfare_loss_tax(params, b_x, t_x, settings)
            row["dwl_daxis"] = _axis_derivative(params, axis, x, b_x, t_x, settings)
        except Exception as exc:  # noqa: BLE001 - recorded in-row by contract
            row["flag"] = type(exc).__name__
        table.rows.append(row)
    return table


def _axis_derivative(params, axis, x, bias, tax, settings) -> float:
    h = 1e-6 * max(1.0, abs(x))
    if axis == "theta":
        h = min(h, 0.5 * (x + 1.0 - 1e-9))
        up = welfare_loss_tax(params, Bias(x + h), tax, settings)
        dn = welfare_loss_tax(params, Bias(x - h), tax, settings)
    else:
        wall = max(-params.gamma, -params.beta) if tax.regime is Regime.BOTH_SIDES else -params.gamma
        h = min(h, 0.5 * (x - wall))
        up = welfare_loss_tax(params, bias, TaxSpec(x + h, tax.regime), settings)
        dn = welfare_loss_tax(params, bias, TaxSpec(x - h, tax.regime), settings)
    return (up - dn) / (2.0 * h)
