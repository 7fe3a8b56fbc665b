"""Command-line figure renderer: ``figures <series-dir> --kind <k> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURE_KINDS, FigureJob, MissingStepError, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render walk figures from a run's CSV series directory",
    )
    parser.add_argument("series_dir", help="directory with the run's CSV outputs")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument(
        "--steps", default="30,50,100,400",
        help="comma-separated steps for the stepwise kinds (default 30,50,100,400)",
    )
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--vmin", type=float, default=None)
    parser.add_argument("--vmax", type=float, default=None)
    args = parser.parse_args(argv)

    try:
        steps = tuple(int(s) for s in args.steps.split(",") if s.strip() != "")
    except ValueError:
        print(f"invalid --steps value: {args.steps!r}", file=sys.stderr)
        return 2

    bounds = {}
    if args.vmin is not None:
        bounds["vmin"] = args.vmin
    if args.vmax is not None:
        bounds["vmax"] = args.vmax

    job = FigureJob(
        series_dir=Path(args.series_dir),
        kind=args.kind,
        steps=steps,
        out_dir=Path(args.out),
        bounds=bounds,
    )
    try:
        result = render(job)
    except (MissingStepError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(result.path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
