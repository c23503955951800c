"""Command-line entry point: ``sim <scenario> --config <file> [options]``."""

from __future__ import annotations

import argparse
import json
import sys

from .xprun import SCENARIOS, export, load_config, run_scenario


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sim",
        description="Run a desk-scale dissipative-chain scenario and export "
                    "CSV data plus a reproducibility manifest.")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--config", required=True,
                   help="JSON config, or a manifest.json to re-run exactly")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seeds", default=None,
                   help="JSON file mapping curve ids to explicit seed lists")
    p.add_argument("--workers", type=int, default=None,
                   help="trajectory worker processes (result is identical "
                        "for any value)")
    p.add_argument("--force", action="store_true",
                   help="overwrite existing output files")
    p.add_argument("--lab-frame", action="store_true",
                   help="quantum_walk only: evolve under the modulated "
                        "lab-frame device instead of the effective chain")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config)
    if cfg.scenario != args.scenario:
        print(f"error: config is for scenario {cfg.scenario!r}, "
              f"not {args.scenario!r}", file=sys.stderr)
        return 2
    if args.workers is not None:
        cfg.values["workers"] = args.workers
    if args.lab_frame:
        if cfg.scenario != "quantum_walk":
            print("error: --lab-frame applies to quantum_walk only", file=sys.stderr)
            return 2
        cfg.values["lab_frame"] = True
    if args.seeds:
        with open(args.seeds) as fh:
            cfg.values["seeds"] = json.load(fh)
    out_dir = args.out or cfg.get("out_dir") or f"out_{cfg.scenario}"

    result = run_scenario(cfg)
    try:
        export(result, cfg, out_dir, force=args.force)
    except FileExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    n_files = len(result["tables"]) + (1 if result.get("report") else 0) + 1
    print(f"wrote {n_files} files to {out_dir}")
    if result.get("failed"):
        print("scenario validation FAILED; see report.json", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
