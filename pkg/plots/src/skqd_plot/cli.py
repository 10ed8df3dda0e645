"""Command line for figure rendering.

    skqd-plot <spec.json>
    skqd-plot --kind error-vs-n --in bench-tfim.csv --out fig1.png
"""

from __future__ import annotations

import argparse
import json
import sys

from .render import EmptyDataError, PlotSpec, SchemaError, render


def spec_from_json(path: str) -> PlotSpec:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return PlotSpec(**data)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="skqd-plot", description="Render skqd benchmark CSVs to figures")
    parser.add_argument("spec", nargs="?", help="JSON plot spec")
    parser.add_argument("--kind", choices=("error-vs-n", "error-vs-D", "correlations"))
    parser.add_argument("--in", dest="source", help="input CSV")
    parser.add_argument("--out", help="output image path")
    parser.add_argument("--linear-y", action="store_true",
                        help="disable the default log error axis")
    args = parser.parse_args(argv)
    try:
        if args.spec:
            spec = spec_from_json(args.spec)
        else:
            if not (args.kind and args.source and args.out):
                parser.error("need either a spec file or --kind/--in/--out")
            spec = PlotSpec(source=args.source, kind=args.kind, out=args.out,
                            log_y=not args.linear_y)
        out = render(spec)
        print(out)
        return 0
    except FileNotFoundError as exc:
        print(f"error (missing-file): {exc}", file=sys.stderr)
        return 2
    except (SchemaError, EmptyDataError, TypeError) as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
