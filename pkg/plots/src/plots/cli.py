"""plots render --kind <k> --in <csv...> --out <img> [--ref <json>]"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotJob, RenderError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render a figure from trace CSVs")
    p_render.add_argument("--kind", required=True, choices=KINDS)
    p_render.add_argument("--in", dest="inputs", nargs="+", required=True)
    p_render.add_argument("--out", required=True)
    p_render.add_argument("--ref", default=None, help="JSON with reference values")
    p_render.add_argument("--style-seed", type=int, default=0)
    p_render.add_argument("--dpi", type=int, default=120)
    p_render.add_argument("--title", default=None)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        job = PlotJob(
            kind=args.kind,
            inputs=tuple(args.inputs),
            output=args.out,
            ref=args.ref,
            style_seed=args.style_seed,
            dpi=args.dpi,
            title=args.title,
        )
        out = render(job)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
