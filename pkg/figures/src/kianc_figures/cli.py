"""Command line wrapper: kianc-figures <kind> <csv> -o <image>."""

import argparse
import sys

from .plots import SCHEMAS, FigureSpec, SchemaError, render


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="kianc-figures",
        description="Render a figure from a kianc result CSV",
    )
    parser.add_argument("kind", choices=sorted(SCHEMAS), help="figure kind")
    parser.add_argument("csv", help="input CSV path")
    parser.add_argument("-o", "--out", required=True, help="output image path (png/svg/pdf)")
    parser.add_argument("--title", default=None)
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)

    spec = FigureSpec(csv_path=args.csv, kind=args.kind, out_path=args.out,
                      title=args.title, dpi=args.dpi)
    try:
        out = render(spec)
    except SchemaError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
