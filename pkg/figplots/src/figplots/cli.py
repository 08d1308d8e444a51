"""Command line: figplots <kind> <input.csv> -o <out.svg>.

Kinds: fig1a and fig1b render with the fig1 welfare-loss layout, fig3
with the optimal-tax layout.  Exit codes: 0 on success, 2 on bad inputs.
"""
from __future__ import annotations

import argparse
import sys

from . import EmptyInput, FigureSpec, MissingColumn, __version__, render

KIND_MAP = {"fig1a": "fig1", "fig1b": "fig1", "fig1": "fig1", "fig3": "fig3"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figplots", description=__doc__)
    parser.add_argument("--version", action="version", version=f"figplots {__version__}")
    parser.add_argument("kind", choices=sorted(KIND_MAP))
    parser.add_argument("input_csv")
    parser.add_argument("-o", "--output", required=True,
                        help="output image path (vector formats recommended)")
    parser.add_argument("--no-reference-lines", action="store_true")
    parser.add_argument("--title", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        input_csv=args.input_csv,
        kind=KIND_MAP[args.kind],
        output_path=args.output,
        reference_lines=not args.no_reference_lines,
        title=args.title,
    )
    try:
        path = render(spec)
    except (MissingColumn, EmptyInput, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
