"""Command line entry point: render trend figures from a run directory."""

from __future__ import annotations

import argparse
import os
import sys

from plots.figures import FIGURES, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render trend figures from simulator summary CSV output.",
    )
    parser.add_argument(
        "--in",
        dest="input_dir",
        required=True,
        help="directory holding summary.csv from a simulator run or sweep",
    )
    parser.add_argument(
        "--out",
        dest="output_dir",
        required=True,
        help="directory to write <figure_id>.png files into",
    )
    parser.add_argument(
        "--figure",
        choices=sorted(FIGURES),
        help="render only this figure (default: all of them)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    summary = os.path.join(args.input_dir, "summary.csv")
    figure_ids = [args.figure] if args.figure else sorted(FIGURES)
    os.makedirs(args.output_dir, exist_ok=True)
    try:
        for figure_id in figure_ids:
            out = render(
                FigureSpec(
                    figure_id=figure_id,
                    input_csv=summary,
                    output_image=os.path.join(args.output_dir, f"{figure_id}.png"),
                )
            )
            print(out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
