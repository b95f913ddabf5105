"""Command-line front end: ptplot --kind imag-vs-g --in scan.csv --out fig.png"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptplot", description="Render figures from PT-spectrum scan CSV output"
    )
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--in", dest="infile", required=True, help="scan/solve CSV path")
    parser.add_argument("--out", required=True, help="output image path (PNG)")
    parser.add_argument("--window", type=float, default=None, help="keep Re <= window")
    parser.add_argument("--fit", default=None, help="fit.json to overlay on the frontier panel")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        csv_path=args.infile,
        kind=args.kind,
        out_path=args.out,
        window=args.window,
        fit_json=args.fit,
    )
    try:
        render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
