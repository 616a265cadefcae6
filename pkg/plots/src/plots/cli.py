"""Command line front end.

Exit codes: 0 success, 2 bad configuration or CSV contract violation,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from .render import PlotJob, PlotKind, SchemaError, render

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plots", description="Batch plotter for the toolkit's CSV outputs.")
    parser.add_argument("kind", choices=[k.value for k in PlotKind])
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        metavar="CSV",
        help="input CSV; singularity-zoom takes a profile then a scan",
    )
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default=None)
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = PlotJob(
            inputs=tuple(args.inputs),
            kind=PlotKind(args.kind),
            out=args.out,
            title=args.title,
            xlabel=args.xlabel,
            ylabel=args.ylabel,
        )
        render(job)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
