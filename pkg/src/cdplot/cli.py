"""Command-line entry for rendering cdquench CSVs into figures."""

from __future__ import annotations

import argparse
import sys

from .plotting import PlotDataError, PlotSpec, render

EXIT_OK = 0
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdplot", description="Render quench-report CSVs into figures")
    subs = parser.add_subparsers(dest="command", required=True)
    plot = subs.add_parser("plot", help="render one figure")
    plot.add_argument("--kind", choices=["fig1", "fig2", "lz"], required=True)
    plot.add_argument("--in", dest="inputs", nargs="+", required=True,
                      help="input CSV file(s)")
    plot.add_argument("--out", required=True, help="output image path")
    plot.add_argument("--raster", action="store_true",
                      help="write a raster (PNG) image instead of vector")
    plot.add_argument("--no-rescale", dest="rescale", action="store_false",
                      help="omit the k*M inset on fig1 panels")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(inputs=tuple(args.inputs), kind=args.kind,
                        out=args.out, raster=args.raster,
                        rescale=args.rescale)
        report = render(spec)
    except PlotDataError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(report.path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
