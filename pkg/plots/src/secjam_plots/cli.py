"""Console entry points: plot_curves and plot_scatter."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, SchemaError, render_curves, render_scatter


def _run(kind: str, argv: list[str] | None) -> int:
    parser = argparse.ArgumentParser(
        prog=f"plot_{kind}",
        description=(
            "Render per-algorithm learning curves with seed bands"
            if kind == "curves"
            else "Render the SR-vs-secure-EE scatter with trend lines"
        ),
    )
    parser.add_argument("--csv", required=True, help="merged sweep CSV")
    parser.add_argument("--out", required=True, help="output image path")
    if kind == "curves":
        parser.add_argument("--window", type=int, default=20,
                            help="centered smoothing window in episodes")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            csv_path=args.csv,
            out_path=args.out,
            kind=kind,
            window=getattr(args, "window", 20),
        )
        render = render_curves if kind == "curves" else render_scatter
        result = render(spec)
    except (SchemaError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for path in result["paths"]:
        print(path)
    return 0


def main_curves(argv=None) -> int:
    return _run("curves", argv)


def main_scatter(argv=None) -> int:
    return _run("scatter", argv)


if __name__ == "__main__":
    sys.exit(main_curves())
