"""Command line: render one figure from experiment output files.

Exit codes: 0 on success, 2 on schema violations or unreadable inputs.
"""

from __future__ import annotations

import argparse
import sys

from . import render
from .schemas import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vesselplots",
        description="Render figures from vesselprior CSV outputs")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--kind", choices=list(render.KINDS), required=True)
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   metavar="FILE",
                   help="main input file; band-1d/contour-2d accept an "
                        "optional second file with the truth curve/field")
    p.add_argument("--measurements", default=None,
                   help="measurement CSV overlaid as asterisks")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--title", default=None)
    p.add_argument("--shade", type=float, nargs=2, default=None,
                   metavar=("LO", "HI"),
                   help="curve kind: shade this abscissa interval")
    args = parser.parse_args(argv)

    main_in = args.inputs[0]
    second = args.inputs[1] if len(args.inputs) > 1 else None
    try:
        if args.kind == "band-1d":
            render.render_band_1d(main_in, args.out,
                                  measurements_path=args.measurements,
                                  truth_path=second, title=args.title)
        elif args.kind == "surface-2d":
            render.render_surface_2d(main_in, args.out,
                                     measurements_path=args.measurements,
                                     title=args.title)
        elif args.kind == "contour-2d":
            render.render_contour_2d(main_in, args.out, truth_path=second,
                                     measurements_path=args.measurements,
                                     title=args.title)
        elif args.kind == "heatmap":
            render.render_heatmap(main_in, args.out, title=args.title)
        else:
            render.render_curve(main_in, args.out, title=args.title,
                                shade=args.shade)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
