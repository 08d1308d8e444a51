"""Command-line interface: solve, sweep, threshold, optimize, figure, verify, replay.

Every file-writing command drops a manifest next to its outputs recording
the fully resolved parameters, seed, backend, and output hashes; `replay`
re-executes a manifest and checks the outputs reproduce byte-for-byte.

Exit codes: 0 success, 1 verification failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .benchmark import externality_balance
from .equilibrium import price_stats, solve_equilibrium
from .errors import DiagmktError, Infeasible
from .oracle import run_suite
from .params import Bias, MarketParams, Regime, TaxSpec, validate
from .policy import (
    optimal_tax,
    optimal_theta,
    sweep,
    threshold_delta_star,
    threshold_theta_private,
    threshold_theta_public,
)
from .welfare import welfare_loss, welfare_loss_tax

FIGURE_PRESETS = {
    "fig1a": dict(gamma=3.0, beta=0.1, tau0=0.01, taueps=0.01, tauS=50.0, muS=0.0),
    "fig1b": dict(gamma=3.0, beta=2.0, tau0=1.0, taueps=5.0, tauS=1.0, muS=0.0),
}
FIG1_GRID = (-0.2, 0.6)
FIG3_GRID = (-0.9, 1.0)

_PARAM_FLAGS = ("gamma", "beta", "tau0", "taueps", "tauS", "muS", "theta", "delta")


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    for flag in _PARAM_FLAGS:
        parser.add_argument(f"--{flag}", type=float, default=None)
    parser.add_argument("--regime", choices=["both", "informed"], default=None)
    parser.add_argument("--config", type=str, default=None,
                        help="flat key=value file; explicit flags override it")


_DEFAULTS = {
    "gamma": 1.0, "beta": 1.0, "tau0": 1.0, "taueps": 1.0, "tauS": 1.0,
    "muS": 0.0, "theta": 0.0, "delta": 0.0, "regime": "both",
}


def _read_config(path: str) -> dict:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _resolve_inputs(args) -> tuple[MarketParams, Bias, TaxSpec, dict]:
    resolved = dict(_DEFAULTS)
    if getattr(args, "config", None):
        file_values = _read_config(args.config)
        unknown = set(file_values) - set(_DEFAULTS) - {"seed", "points"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key, value in file_values.items():
            if key == "regime":
                resolved[key] = value
            elif key in ("seed", "points"):
                if getattr(args, key, None) is None:
                    setattr(args, key, int(value))
            else:
                resolved[key] = float(value)
    for flag in _PARAM_FLAGS:
        value = getattr(args, flag, None)
        if value is not None:
            resolved[flag] = value
    if getattr(args, "regime", None) is not None:
        resolved["regime"] = args.regime

    params = MarketParams(
        gamma=resolved["gamma"], beta=resolved["beta"], tau0=resolved["tau0"],
        tau_eps=resolved["taueps"], tau_s=resolved["tauS"], mu_s=resolved["muS"],
    )
    bias = Bias(resolved["theta"])
    tax = TaxSpec(resolved["delta"], Regime.parse(resolved["regime"]))
    return params, bias, tax, resolved


def _check_valid(params, bias, tax) -> None:
    report = validate(params, bias, tax)
    if not report.ok:
        for line in report.violations:
            print(f"validation: {line}", file=sys.stderr)
        raise SystemExit(2)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: str, name: str, command: str, resolved: dict,
                    outputs: list[str], extra: dict | None = None) -> str:
    manifest = {
        "command": command,
        "tool": "diagmkt",
        "tool_version": __version__,
        "backend": BACKEND,
        "parameters": resolved,
        "outputs": [{"path": os.path.basename(p), "sha256": _sha256(p)} for p in outputs],
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, f"{name}.manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    if args.from_json:
        source = sys.stdin if args.from_json == "-" else open(args.from_json, encoding="utf-8")
        try:
            payload_in = json.load(source)
        finally:
            if source is not sys.stdin:
                source.close()
        resolved = payload_in["parameters"]
        params = MarketParams(
            gamma=resolved["gamma"], beta=resolved["beta"], tau0=resolved["tau0"],
            tau_eps=resolved["taueps"], tau_s=resolved["tauS"], mu_s=resolved["muS"],
        )
        bias = Bias(resolved["theta"])
        tax = TaxSpec(resolved["delta"], Regime.parse(resolved["regime"]))
    else:
        params, bias, tax, resolved = _resolve_inputs(args)
    _check_valid(params, bias, tax)
    eq = solve_equilibrium(params, bias, tax)
    stats = price_stats(eq)
    if tax.delta == 0.0:
        breakdown = welfare_loss(params, bias)
        wl = {"wl_total": breakdown.wl_total, "wl_bayes": breakdown.wl_bayes,
              "wl_diag": breakdown.wl_diag}
    else:
        wl = {"wl_total": welfare_loss_tax(params, bias, tax)}
    payload = {
        "parameters": resolved,
        "equilibrium": dataclasses.asdict(eq),
        "price_stats": dataclasses.asdict(stats),
        "welfare": wl,
    }
    if args.json:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        for section, values in payload.items():
            print(f"[{section}]")
            for key, value in values.items():
                print(f"  {key} = {value}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        out_path = os.path.join(args.out, "solve.json")
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_manifest(args.out, "solve", "solve", resolved, [out_path])
    return 0


def cmd_sweep(args) -> int:
    params, bias, tax, resolved = _resolve_inputs(args)
    _check_valid(params, bias, tax)
    grid = np.linspace(args.min, args.max, args.points)
    table = sweep(params, args.axis, grid, bias, tax)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, f"sweep_{args.axis}.csv")
    table.to_csv(csv_path)
    resolved.update({"axis": args.axis, "min": args.min, "max": args.max,
                     "points": args.points})
    _write_manifest(args.out, f"sweep_{args.axis}", "sweep", resolved, [csv_path])
    print(csv_path)
    return 0


def cmd_threshold(args) -> int:
    params, bias, tax, resolved = _resolve_inputs(args)
    _check_valid(params, bias, tax)
    bench = externality_balance(params)
    payload = {
        "parameters": resolved,
        "a_star": bench.a_star,
        "a_team": bench.a_team,
        "balance": bench.balance.value,
        "theta_prime": threshold_theta_private(params),
        "theta_dprime": threshold_theta_public(params),
    }
    try:
        payload["delta_star"] = threshold_delta_star(params, bias, tax.regime)
    except Infeasible as exc:
        payload["delta_star"] = None
        payload["delta_star_note"] = str(exc)
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def cmd_optimize(args) -> int:
    params, bias, tax, resolved = _resolve_inputs(args)
    _check_valid(params, bias, tax)
    theta_best = optimal_theta(params)
    tax_best = optimal_tax(params, bias, tax.regime)
    payload = {
        "parameters": resolved,
        "theta_opt": dataclasses.asdict(theta_best),
        "tax_opt": dataclasses.asdict(tax_best),
    }
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _figure_params(preset: dict) -> MarketParams:
    return MarketParams(gamma=preset["gamma"], beta=preset["beta"], tau0=preset["tau0"],
                        tau_eps=preset["taueps"], tau_s=preset["tauS"], mu_s=preset["muS"])


def _write_fig1_csv(path: str, name: str, points: int) -> None:
    import csv as _csv

    from .benchmark import team_loading
    from .welfare import wl_general

    params = _figure_params(FIGURE_PRESETS[name])
    a_team = team_loading(params)
    wl_team = wl_general(params, a_team, 1.0 / params.gamma - a_team)
    wl_market = welfare_loss(params, Bias(0.0)).wl_total
    grid = np.linspace(FIG1_GRID[0], FIG1_GRID[1], points)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "wl_total", "wl_bayes", "wl_market", "wl_team"])
        for theta in grid:
            breakdown = welfare_loss(params, Bias(float(theta)))
            writer.writerow([repr(float(theta)), repr(float(breakdown.wl_total)),
                             repr(float(breakdown.wl_bayes)), repr(float(wl_market)),
                             repr(float(wl_team))])


def _write_fig3_csv(path: str, points: int) -> None:
    import csv as _csv

    cases = [("case1", _figure_params(FIGURE_PRESETS["fig1a"])),
             ("case2", _figure_params(FIGURE_PRESETS["fig1b"]))]
    grid = np.linspace(FIG3_GRID[0], FIG3_GRID[1], points)
    rows = []
    for theta in grid:
        row = [repr(float(theta))]
        for _, params in cases:
            best = optimal_tax(params, Bias(float(theta)), Regime.BOTH_SIDES)
            flag = "boundary" if best.boundary else ""
            row.extend([repr(float(best.x)), flag])
        rows.append(row)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "delta_opt_case1", "flag_case1",
                         "delta_opt_case2", "flag_case2"])
        writer.writerows(rows)


def cmd_figure(args) -> int:
    name = args.name
    if name not in ("fig1a", "fig1b", "fig3"):
        print(f"unknown figure preset {name!r}", file=sys.stderr)
        return 2
    points = args.points or (200 if name != "fig3" else 61)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, f"{name}.csv")
    if name == "fig3":
        _write_fig3_csv(csv_path, points)
        resolved = {"cases": FIGURE_PRESETS, "grid": FIG3_GRID, "points": points,
                    "regime": "both"}
    else:
        _write_fig1_csv(csv_path, name, points)
        resolved = {"preset": FIGURE_PRESETS[name], "grid": FIG1_GRID, "points": points}
    _write_manifest(args.out, name, f"figure {name}", resolved, [csv_path])
    print(csv_path)
    return 0


def cmd_verify(args) -> int:
    n_reps = 10_000 if args.quick else args.reps
    suite = run_suite(n_draws=args.draws, n_agents=args.agents, n_reps=n_reps,
                      seed=args.seed)
    for line in suite.lines():
        print(line)
    print(f"suite: {'PASS' if suite.passed else 'FAIL'} "
          f"({args.draws} draws, {args.agents} agents, {n_reps} reps, seed {args.seed})")
    return 0 if suite.passed else 1


def cmd_replay(args) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("backend") != BACKEND:
        print(f"manifest was produced on backend {manifest.get('backend')!r}, "
              f"current backend is {BACKEND!r}; byte-identity is only guaranteed "
              "per backend", file=sys.stderr)
    out_dir = args.out or os.path.dirname(os.path.abspath(args.manifest))
    argv = _argv_from_manifest(manifest, out_dir)
    code = main(argv)
    if code != 0:
        return code
    for entry in manifest["outputs"]:
        path = os.path.join(out_dir, entry["path"])
        fresh = _sha256(path)
        if fresh != entry["sha256"]:
            print(f"replay mismatch: {entry['path']} hash {fresh} != {entry['sha256']}",
                  file=sys.stderr)
            return 1
    print(f"replay ok: {len(manifest['outputs'])} output(s) reproduced byte-identically")
    return 0


def _argv_from_manifest(manifest: dict, out_dir: str) -> list[str]:
    command = manifest["command"].split()
    resolved = manifest["parameters"]
    argv = [command[0]]
    if command[0] == "figure":
        argv.append(command[1])
        argv += ["--points", str(resolved["points"]), "--out", out_dir]
        return argv
    flag_map = {"taueps": "taueps", "tauS": "tauS", "muS": "muS"}
    for key, value in resolved.items():
        if key in ("axis", "min", "max", "points"):
            continue
        if key == "regime":
            argv += ["--regime", str(value)]
        elif key in _PARAM_FLAGS or key in flag_map:
            argv += [f"--{key}", repr(float(value))]
    if command[0] == "sweep":
        argv += ["--axis", resolved["axis"], "--min", repr(resolved["min"]),
                 "--max", repr(resolved["max"]), "--points", str(resolved["points"])]
    argv += ["--out", out_dir]
    return argv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diagmkt",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"diagmkt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one equilibrium and report welfare")
    _add_param_flags(p_solve)
    p_solve.add_argument("--json", action="store_true")
    p_solve.add_argument("--from-json", dest="from_json", type=str, default=None,
                         help="re-solve from a previously emitted JSON payload ('-' for stdin)")
    p_solve.add_argument("--out", type=str, default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="tabulate the equilibrium along a grid")
    _add_param_flags(p_sweep)
    p_sweep.add_argument("--axis", choices=["theta", "delta"], required=True)
    p_sweep.add_argument("--min", type=float, required=True)
    p_sweep.add_argument("--max", type=float, required=True)
    p_sweep.add_argument("--points", type=int, default=101)
    p_sweep.add_argument("--out", type=str, default=".")
    p_sweep.set_defaults(func=cmd_sweep)

    p_thresh = sub.add_parser("threshold", help="efficiency thresholds and balance verdict")
    _add_param_flags(p_thresh)
    p_thresh.set_defaults(func=cmd_threshold)

    p_opt = sub.add_parser("optimize", help="welfare-minimizing bias and tax levels")
    _add_param_flags(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_fig = sub.add_parser("figure", help="emit the CSV behind a named figure preset")
    p_fig.add_argument("name")
    p_fig.add_argument("--points", type=int, default=None)
    p_fig.add_argument("--out", type=str, default=".")
    p_fig.set_defaults(func=cmd_figure)

    p_verify = sub.add_parser("verify", help="run the Monte Carlo oracle suite")
    p_verify.add_argument("--quick", action="store_true", help="use 10^4 replications")
    p_verify.add_argument("--draws", type=int, default=20)
    p_verify.add_argument("--agents", type=int, default=10_000)
    p_verify.add_argument("--reps", type=int, default=100_000)
    p_verify.add_argument("--seed", type=int, default=42)
    p_verify.set_defaults(func=cmd_verify)

    p_replay = sub.add_parser("replay", help="re-run a manifest and check outputs")
    p_replay.add_argument("manifest")
    p_replay.add_argument("--out", type=str, default=None)
    p_replay.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (DiagmktError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
