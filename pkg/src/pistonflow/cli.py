"""Command-line front end.

Subcommands::

    pistonflow simulate  --config scenario.json --out results/
    pistonflow sweep     --config scenario.json --axis controller.R=0.5,1,2 --out sweep/
    pistonflow check-gas --config scenario.json          (or a bare gas block)
    pistonflow fit-rate  --series trajectory.csv [--column V] [--window 0.5]

Exit codes: 0 success, 2 validation failure, 3 simulation divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .gas import GasModelError
from .harness import (ScenarioError, _json_default, check_gas, fit_decay,
                      load_scenario, run, sweep)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGED = 3


def _parse_axis(text: str):
    if "=" not in text:
        raise ScenarioError(f"axis {text!r} must look like name=v1,v2,...")
    name, _, values = text.partition("=")
    parsed = []
    for token in values.split(","):
        token = token.strip()
        try:
            parsed.append(json.loads(token))
        except json.JSONDecodeError:
            parsed.append(token)
    if not parsed:
        raise ScenarioError(f"axis {name!r} has no values")
    return name.strip(), parsed


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.config)
    result = run(scenario, out_dir=args.out)
    print(json.dumps(result.report, indent=2, default=_json_default))
    return EXIT_OK if result.record.completed else EXIT_DIVERGED


def _cmd_sweep(args) -> int:
    base = json.loads(Path(args.config).read_text())
    axes = dict(_parse_axis(text) for text in args.axis or [])
    rows = sweep(base, axes, out_dir=args.out, max_workers=args.jobs)
    for row in rows:
        print(json.dumps(row, default=_json_default))
    return EXIT_OK


def _cmd_check_gas(args) -> int:
    block = json.loads(Path(args.config).read_text())
    if isinstance(block, dict) and "gas" in block:
        block = block["gas"]
    report = check_gas(block)
    print(json.dumps(report, indent=2, default=_json_default))
    ok = report["admissibility"]["consistent"] and report["ratio_bound"]["satisfied"]
    return EXIT_OK if ok else EXIT_VALIDATION


def _cmd_fit_rate(args) -> int:
    with open(args.series, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        rows = list(reader)
    if not rows:
        raise ScenarioError(f"{args.series}: no data rows")
    if args.column not in rows[0] or "t" not in rows[0]:
        raise ScenarioError(f"{args.series}: need columns 't' and {args.column!r}")
    t = np.array([float(r["t"]) for r in rows])
    v = np.array([float(r[args.column]) for r in rows])
    x_norm = (np.array([float(r["x_norm"]) for r in rows])
              if "x_norm" in rows[0] else None)
    fit = fit_decay(t, v, window_fraction=args.window, x_norm=x_norm)
    print(json.dumps({
        "sigma_hat": fit.sigma_hat, "M_hat": fit.M_hat, "r_squared": fit.r_squared,
        "window": list(fit.window), "degenerate": fit.degenerate,
        "reason": fit.reason, "n_points": fit.n_points,
    }, indent=2, default=_json_default))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pistonflow",
        description="Two-piston compressible gas: simulation and certification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario and write its reports")
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", default=None, help="output directory for CSV/JSON files")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter grid over a scenario")
    p.add_argument("--config", required=True, help="base scenario JSON file")
    p.add_argument("--axis", action="append", metavar="NAME=V1,V2,...",
                   help="dotted config path and comma-separated values (repeatable)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--jobs", type=int, default=None, help="max concurrent cells")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("check-gas", help="certify the gas laws of a scenario")
    p.add_argument("--config", required=True,
                   help="scenario JSON file or bare gas block")
    p.set_defaults(fn=_cmd_check_gas)

    p = sub.add_parser("fit-rate", help="fit an exponential rate to a CSV series")
    p.add_argument("--series", required=True, help="CSV with columns t and V")
    p.add_argument("--column", default="V", help="value column name (default V)")
    p.add_argument("--window", type=float, default=0.5,
                   help="trailing window fraction (default 0.5)")
    p.set_defaults(fn=_cmd_fit_rate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, GasModelError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
