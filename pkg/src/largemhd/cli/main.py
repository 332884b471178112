"""Command-line entry point: ``largemhd {run,check,sweep,plot}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from ..diagnostics.io import read_csv
from .config import ConfigError, load_config
from .plots import emit_plots
from .scenarios import SCENARIOS, execute

__all__ = ["main", "build_parser"]

log = logging.getLogger("largemhd")

_SCENARIO_DIM = {"large-data-3d": 3}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. --set solver.t_end=5 (repeatable)")
    p.add_argument("--out", type=Path, help="output directory (default: output.directory)")
    p.add_argument("--seed", type=int, help="seed for random perturbations and sampled checks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="largemhd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write CSV, report.json and plots")
    p.add_argument("scenario", help=", ".join(SCENARIOS))
    _add_common(p)

    p = sub.add_parser("check", help="run a scenario and write report.json only")
    p.add_argument("scenario", help=", ".join(SCENARIOS))
    _add_common(p)

    p = sub.add_parser("sweep", help="repeat a scenario over several values of one config key")
    p.add_argument("scenario", help=", ".join(SCENARIOS))
    p.add_argument("--vary", required=True, metavar="KEY=V1,V2,...", help="e.g. data.epsilon=0.2,0.1")
    _add_common(p)

    p = sub.add_parser("plot", help="plot a trajectory CSV written by run")
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, help="output directory (default: next to the CSV)")
    p.add_argument("--eta", type=float, help="bootstrap threshold line")
    return parser


def _config(args, extra=()):
    overrides = list(args.overrides) + list(extra)
    if args.seed is not None:
        overrides.append(f"data.seed={args.seed}")
    return load_config(args.config, overrides, dim=_SCENARIO_DIM.get(args.scenario, 2))


def _print_checks(result) -> None:
    for c in result.checks:
        print(c.line())
    print(f"{result.scenario}: {'PASS' if result.passed else 'FAIL'}")


def _cmd_run(args, plots: bool) -> int:
    cfg = _config(args)
    out = args.out or Path(cfg.output)
    result, _ = execute(args.scenario, cfg, out, plots=plots)
    _print_checks(result)
    print(f"artifacts in {out}")
    return 0 if result.passed else 1


def _cmd_sweep(args) -> int:
    key, sep, values = args.vary.partition("=")
    if not sep or not values:
        print(f"--vary expects KEY=V1,V2,..., got {args.vary!r}", file=sys.stderr)
        return 2
    base = args.out or Path(load_config(args.config, args.overrides).output)
    rows, ok = [], True
    for value in values.split(","):
        cfg = _config(args, [f"{key}={value}"])
        out = base / f"{key}={value}"
        result, report = execute(args.scenario, cfg, out, plots=False)
        ok = ok and result.passed
        for c in result.checks:
            rows.append([value, c.name, format(c.value, ".16e"), format(c.envelope, ".16e"), int(c.passed)])
        print(f"{key}={value}: {'PASS' if result.passed else 'FAIL'}")
    base.mkdir(parents=True, exist_ok=True)
    with open(base / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([key, "check", "value", "envelope", "pass"])
        w.writerows(rows)
    return 0 if ok else 1


def _cmd_plot(args) -> int:
    records = read_csv(args.csv)
    out = args.out or args.csv.parent
    for path in emit_plots(records, out, eta=args.eta):
        print(path)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command != "plot" and args.scenario not in SCENARIOS:
        parser.print_usage(sys.stderr)
        print(f"unknown scenario {args.scenario!r}; choose from {', '.join(SCENARIOS)}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            return _cmd_run(args, plots=True)
        if args.command == "check":
            return _cmd_run(args, plots=False)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_plot(args)
    except ConfigError as err:
        print(err, file=sys.stderr)
        return 2
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
