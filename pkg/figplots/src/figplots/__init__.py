"""Chart rendering for diagmkt CSV outputs.

Consumes only the published CSV schemas (never recomputes model
quantities) and writes deterministic vector images: a fixed SVG hash salt
and stripped date metadata make repeated renders byte-identical on a
pinned toolchain.

Two kinds:

* ``fig1`` -- welfare-loss curves against the bias: total loss, its
  Bayesian component, and horizontal market/team reference levels.
* ``fig3`` -- optimal tax against the bias for the two preset cases,
  with boundary-flagged rows dropped from the curves.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402 - backend must be pinned first

__version__ = "0.1.0"

FIG1_COLUMNS = ("theta", "wl_total", "wl_bayes", "wl_market", "wl_team")
FIG3_COLUMNS = ("theta", "delta_opt_case1", "flag_case1", "delta_opt_case2", "flag_case2")


class MissingColumn(KeyError):
    def __init__(self, name: str):
        self.column = name
        super().__init__(f"input CSV lacks required column {name!r}")


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    kind: str  # "fig1" or "fig3"
    output_path: str
    x_label: str = "bias"
    y_label: str = ""
    reference_lines: bool = True
    title: str = ""


def _read_rows(path: str, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for name in required:
            if name not in header:
                raise MissingColumn(name)
        rows = list(reader)
    if not rows:
        raise EmptyInput(f"{path} has a header but no data rows")
    return rows


def _fig1_axes(ax, rows: list[dict], spec: FigureSpec) -> None:
    theta = [float(r["theta"]) for r in rows]
    ax.plot(theta, [float(r["wl_total"]) for r in rows],
            color="tab:blue", label="total loss")
    ax.plot(theta, [float(r["wl_bayes"]) for r in rows],
            color="tab:orange", label="Bayesian-shaped part")
    if spec.reference_lines:
        ax.plot(theta, [float(r["wl_market"]) for r in rows],
                color="tab:green", linestyle="--", label="market level (no bias)")
        ax.plot(theta, [float(r["wl_team"]) for r in rows],
                color="tab:red", linestyle=":", label="team level")
    ax.set_ylabel(spec.y_label or "welfare loss")


def _fig3_axes(ax, rows: list[dict], spec: FigureSpec) -> None:
    for case, style in (("case1", "-"), ("case2", "--")):
        pts = [(float(r["theta"]), float(r[f"delta_opt_{case}"]))
               for r in rows
               if r[f"flag_{case}"] == "" and r[f"delta_opt_{case}"] != ""]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, style, label=case)
    if spec.reference_lines:
        ax.axhline(0.0, color="grey", linewidth=0.6)
    ax.set_ylabel(spec.y_label or "optimal tax")


def render(spec: FigureSpec) -> str:
    """Render the spec to its output path; returns the path written.

    Raises MissingColumn / EmptyInput before anything is written, so a
    failed render leaves no file behind.
    """
    if spec.kind not in ("fig1", "fig3"):
        raise ValueError(f"unknown figure kind {spec.kind!r}")
    required = FIG1_COLUMNS if spec.kind == "fig1" else FIG3_COLUMNS
    rows = _read_rows(spec.input_csv, required)

    with plt.rc_context({"svg.hashsalt": "figplots", "figure.dpi": 100}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        try:
            if spec.kind == "fig1":
                _fig1_axes(ax, rows, spec)
            else:
                _fig3_axes(ax, rows, spec)
            ax.set_xlabel(spec.x_label)
            if spec.title:
                ax.set_title(spec.title)
            ax.legend(frameon=False, fontsize=9)
            fig.savefig(spec.output_path, metadata={"Date": None})
        finally:
            plt.close(fig)
    return spec.output_path
