"""Command-line figure renderer.

Usage: pseco-plot --kind KIND --in file.csv [--in more.csv] --out fig.svg
       [--label NAME ...]

Exit codes: 0 success, 2 bad arguments or bad data.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, PlotDataError, render

EXIT_DATA = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseco-plot",
        description="Render experiment figures from metrics CSV files.",
    )
    parser.add_argument("--kind", choices=sorted(FIGURE_KINDS), required=True)
    parser.add_argument(
        "--in", dest="inputs", action="append", required=True,
        metavar="FILE", help="input CSV; repeat to overlay several runs",
    )
    parser.add_argument("--out", required=True, help="output figure path (.svg default format)")
    parser.add_argument(
        "--label", dest="labels", action="append", metavar="NAME",
        help="legend label, one per --in, in order",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(args.kind, args.inputs, args.out, args.labels)
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
