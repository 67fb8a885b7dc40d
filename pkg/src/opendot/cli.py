"""opendot: bound states, resonance widths, poles and strong-field certificates of an open quantum dot.

Exit codes: 0 success, 1 stage failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError
from .pipeline import FAILED_MARKER, emit_plot_data, run_scenario, sweep

SUBCOMMAND_STAGES = {
    "validate": ["validate"],
    "levels": ["levels"],
    "perturb": ["levels", "perturb"],
    "poles": ["levels", "poles"],
    "dispersion": ["dispersion"],
    "certify": ["strongfield"],
    "run": None,
}

SWEEP_PLOTS = {"B": "loglog-width", "lambda": "pole-trajectory", "p": "dispersion"}


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opendot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(SUBCOMMAND_STAGES) + ["sweep"]:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML run configuration (defaults when omitted)")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        if name == "sweep":
            p.add_argument("--axis", required=True, choices=["B", "lambda", "p"])
            p.add_argument("--values", required=True, help="comma-separated ascending values")
            p.add_argument("--fixed", type=float, default=0.0,
                           help="value of the other coupling for B and lambda sweeps")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out if args.out else cfg.output["directory"])
        if args.command == "sweep":
            values = _values(args.values)
            table = sweep(cfg, args.axis, values, args.fixed)
            out.mkdir(parents=True, exist_ok=True)
            table.to_csv(out / f"{table.name}.csv")
            if args.axis in ("B", "lambda"):
                emit_plot_data(table, "pole-trajectory", out / f"{table.name}_trajectory.dat")
            if args.axis == "B":
                emit_plot_data(table, "loglog-width", out / f"{table.name}_loglog.dat")
            if args.axis == "p":
                emit_plot_data(table, "dispersion", out / f"{table.name}.dat")
            print(f"{table.name}: {len(table.rows)} rows -> {out}")
            return 0
        bundle = run_scenario(cfg, out, SUBCOMMAND_STAGES[args.command])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # stage failure: partial outputs and marker already written
        if args.command == "sweep":
            out.mkdir(parents=True, exist_ok=True)
            (out / FAILED_MARKER).write_text(f"sweep failed\n{type(exc).__name__}: {exc}\n")
        print(f"stage failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    summary = {"scenario": bundle.scenario, "config_hash": bundle.config_hash, "stages": bundle.stages,
               "levels": len(bundle.levels), "estimates": len(bundle.estimates),
               "poles": len(bundle.poles), "certificates": len(bundle.certificates)}
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
