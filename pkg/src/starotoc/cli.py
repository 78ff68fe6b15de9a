"""Command-line driver.

    starotoc run CONFIG [--out DIR]
    starotoc validate CONFIG
    starotoc gradient-ratio --q Q [--gamma-p G] [--gamma-h G]
    starotoc preset NAME --out DIR

Data goes to files or stdout, logs to stderr.  Failures print one JSON line
on stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import analysis
from .config import PRESETS, ConfigError, ExperimentConfig, load_config, load_preset
from .runner import feasibility_report, run
from .spin_algebra import RegisterTooLarge

log = logging.getLogger("starotoc")


def _fail(kind: str, message: str, field: str | None = None, code: int = 2) -> int:
    payload = {"error": kind, "message": message}
    if field is not None:
        payload["field"] = field
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def _run_and_report(config: ExperimentConfig, out: str | None) -> int:
    out_dir = Path(out or config.output_dir or Path("out") / config.name)
    manifest = run(config, out_dir)
    print(json.dumps({
        "name": manifest["name"],
        "config_hash": manifest["config_hash"],
        "cells": len(manifest["cells"]),
        "manifest": str(out_dir / "manifest.json"),
        "report": manifest["report"],
    }, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starotoc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a sweep from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: config output.dir or out/<name>)")

    p = sub.add_parser("validate", help="dry-run feasibility report")
    p.add_argument("config")

    p = sub.add_parser("gradient-ratio", help="PFG ratio G1/G2 selecting coherence order q")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--gamma-p", type=float, default=analysis.GAMMA_31P,
                   help="central-spin gyromagnetic ratio, rad/s/T (default 31P)")
    p.add_argument("--gamma-h", type=float, default=analysis.GAMMA_1H,
                   help="layer-1 gyromagnetic ratio, rad/s/T (default 1H)")

    p = sub.add_parser("preset", help="run a shipped preset")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "run":
            return _run_and_report(load_config(args.config), args.out)
        if args.command == "preset":
            return _run_and_report(load_preset(args.name), args.out)
        if args.command == "validate":
            report = feasibility_report(load_config(args.config))
            print(json.dumps(report, indent=2, sort_keys=True))
            return 0
        if args.command == "gradient-ratio":
            print(f"{analysis.gradient_ratio(args.q, args.gamma_p, args.gamma_h):.6f}")
            return 0
    except ConfigError as exc:
        return _fail("config", str(exc), field=exc.field)
    except RegisterTooLarge as exc:
        return _fail("register_ceiling", str(exc))
    except ValueError as exc:
        return _fail("invalid_input", str(exc))
    return _fail("usage", f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
