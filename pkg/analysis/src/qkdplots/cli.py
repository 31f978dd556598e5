"""Command line: render figures from simulator sweep output directories."""

from __future__ import annotations

import argparse
import json
import sys

from .data import PlotDataError, SchemaError
from .figures import FigureSpec, default_specs, plot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qkdplot", description="Render figures from qkdsim CSV output")
    sub = parser.add_subparsers(dest="command", required=True)
    p_plot = sub.add_parser("plot")
    p_plot.add_argument("--spec", default=None,
                        help="JSON file with a list of figure specs; "
                             "omit to render the default figure families")
    p_plot.add_argument("--data", required=True,
                        help="sweep output directory (sweep.csv + runs/)")
    p_plot.add_argument("--out", required=True, help="image output directory")
    p_plot.add_argument("--level", type=float, default=0.8,
                        help="level filter for default timeseries figures")
    args = parser.parse_args(argv)

    try:
        if args.spec:
            raw = json.loads(open(args.spec).read())
            specs = [FigureSpec.from_dict(entry) for entry in raw]
        else:
            specs = default_specs(args.level)
        for spec in specs:
            result = plot(spec, args.data, args.out)
            print(f"wrote {result['path']}")
    except (SchemaError, PlotDataError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
