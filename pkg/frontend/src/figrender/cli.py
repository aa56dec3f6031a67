"""figrender CLI: render one figure or the whole batch from a data directory."""

from __future__ import annotations

import argparse
import os
import sys

from .csvio import SchemaError
from .figures import FIGURE_IDS, SIDES, FigureSpec, render


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="figrender")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("render", help="render figures from CSV datasets")
    sp.add_argument("--figure", choices=list(FIGURE_IDS) + ["all"], required=True)
    sp.add_argument("--side", choices=list(SIDES) + ["both"], required=True)
    sp.add_argument("--in", dest="input_dir", required=True)
    sp.add_argument("--out", dest="output_dir", required=True)
    args = p.parse_args(argv)

    figures = FIGURE_IDS if args.figure == "all" else (args.figure,)
    sides = SIDES if args.side == "both" else (args.side,)
    os.makedirs(args.output_dir, exist_ok=True)
    try:
        for fig in figures:
            for side in sides:
                out = os.path.join(args.output_dir, f"{fig}_{side}.png")
                spec = FigureSpec(
                    figure=fig, side=side,
                    input_dir=args.input_dir, output_path=out,
                )
                render(spec)
                print(f"wrote {out}")
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
