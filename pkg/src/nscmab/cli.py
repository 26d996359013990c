"""Command line entry point: ``nscmab run | sweep | measures``."""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, RunConfig
from .runner import measures, run, sweep

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nscmab", description="Non-stationary combinatorial semi-bandit runs")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configuration over its seeds")
    r.add_argument("--config", help="JSON run config (defaults are used when omitted)")
    r.add_argument("--seed-override", type=int, help="run this single seed instead of the configured list")
    r.add_argument("--out", help="output directory (overrides out_dir)")
    r.add_argument("--T", type=int, help="horizon")
    r.add_argument("--algo", choices=["cucb_sw", "cucb_bob", "ada_lcmab"])
    r.add_argument("--window", help="'auto' or an integer window for cucb_sw")
    r.add_argument("--L", help="'auto' or an integer block length for cucb_bob")
    r.add_argument("--measure", choices=["S", "V", "Vbar"], help="measure used by --window auto")
    r.add_argument("--mode", choices=["dep", "indep"])

    s = sub.add_parser("sweep", help="run a grid of configurations")
    s.add_argument("--grid", required=True, help="JSON with 'base', 'grid' and optional 'out_dir'")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", help="output directory (overrides the grid's out_dir)")

    mm = sub.add_parser("measures", help="print realized S, V and Vbar of the configured schedules")
    mm.add_argument("--config", required=True)
    return ap


def _int_or_auto(value: str, flag: str):
    if value == "auto":
        return value
    try:
        return int(value)
    except ValueError:
        raise ConfigError([f"{flag}: must be 'auto' or an integer"]) from None


def _run_config(args) -> RunConfig:
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    if args.T is not None:
        doc["T"] = args.T
    algo = doc.setdefault("algo", {})
    if args.algo is not None:
        algo["name"] = args.algo
    if args.window is not None:
        algo["window"] = _int_or_auto(args.window, "--window")
    if args.L is not None:
        algo["L"] = _int_or_auto(args.L, "--L")
    if args.measure is not None:
        algo["measure"] = args.measure
    if args.mode is not None:
        algo["mode"] = args.mode
    if args.seed_override is not None:
        doc["seeds"] = [args.seed_override]
    if args.out is not None:
        doc["out_dir"] = args.out
    return RunConfig.from_dict(doc)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _run_config(args)
            print(json.dumps(run(cfg), sort_keys=True))
            return EXIT_OK
        if args.command == "measures":
            cfg = RunConfig.load(args.config)
            print(json.dumps({"config_hash": cfg.config_hash, "measures": measures(cfg)}, sort_keys=True))
            return EXIT_OK
        with open(args.grid) as fh:
            grid = json.load(fh)
        rows, failures = sweep(grid, args.jobs, args.out)
        print(json.dumps({"rows": len(rows), "failures": failures}, sort_keys=True))
        return EXIT_RUNTIME if failures else EXIT_OK
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
