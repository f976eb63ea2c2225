"""figs <kind> --in <files> --out <dir>

Batch figure renderer for the simulator's CSV/JSON outputs.  Single
threaded, display only.  Exit codes: 0 success, 2 bad inputs, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .io import FigureInputError
from .render import FigureKind, FigureSpec, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figs",
        description="Render figures from persisted simulator outputs; no physics is recomputed.",
    )
    parser.add_argument("kind", choices=[k.value for k in FigureKind])
    parser.add_argument(
        "--in", dest="inputs", nargs="+", required=True, metavar="FILE",
        help="input CSV/JSON files written by the simulator CLI",
    )
    parser.add_argument("--out", dest="out_dir", required=True, help="directory for rendered images")
    parser.add_argument(
        "--log-x", action="store_true",
        help="logarithmic x axis (trajectory series, scaling)",
    )
    parser.add_argument("--log-y", action="store_true", help="logarithmic y axis")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=FigureKind(args.kind), inputs=tuple(args.inputs),
            log_x=args.log_x, log_y=args.log_y,
        )
        paths = render(spec, args.out_dir)
    except FigureInputError as e:
        print(f"input error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 4
    for path in paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
