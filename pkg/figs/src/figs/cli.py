"""Command-line entry point: ``figs render --recipe <file>``."""

from __future__ import annotations

import argparse
import os
import sys

from .recipes import FigureRecipe, RecipeError
from .render import render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="figs",
                                description="Render figures from simulator CSVs")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure from a JSON recipe")
    r.add_argument("--recipe", required=True)
    r.add_argument("--force", action="store_true",
                   help="overwrite an existing output image")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        recipe = FigureRecipe.from_json(args.recipe)
        if os.path.exists(recipe.output) and not args.force:
            print(f"error: {recipe.output} exists; use --force", file=sys.stderr)
            return 2
        render(recipe)
    except (RecipeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {recipe.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
