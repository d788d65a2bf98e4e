"""Command-line entry point.  Exit codes: 0 success, 1 solver error, 2 usage error."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import ConfigError, RunConfig, load_config, preset
from .runner import COMMANDS, run

SUBCOMMANDS = list(COMMANDS) + ["validate"]


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ringsense", description="Ring-condensate rotation sensing noise simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML or JSON run configuration")
        sp.add_argument("--preset", choices=["paper-defaults"], help="start from a built-in parameter set")
        sp.add_argument("--out", default="runs", help="output directory")
        sp.add_argument("--force", action="store_true", help="recompute existing points")
        sp.add_argument("--jobs", type=int, default=None, help="worker processes")
        if name == "bistability":
            sp.add_argument("--axis", choices=["power", "kappa"], help="sweep drive power or cavity linewidth")
    return ap


def _config(args) -> RunConfig:
    base = preset(args.preset) if args.preset else RunConfig()
    cfg = load_config(args.config, base) if args.config else base
    if getattr(args, "axis", None):
        cfg = replace(cfg, bistability_axis=args.axis)
    if args.jobs is not None:
        cfg = replace(cfg, jobs=args.jobs)
    return cfg


def _error(kind: str, message: str, **extra) -> str:
    return json.dumps({"status": "error", "error": kind, "message": message, **extra}, sort_keys=True)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
    except (ConfigError, OSError) as exc:
        print(_error(type(exc).__name__, str(exc)), file=sys.stderr)
        return 2
    if args.jobs is not None and args.jobs < 1:
        print(_error("UsageError", "--jobs must be >= 1"), file=sys.stderr)
        return 2
    if args.command == "validate":
        from .checks import run_checks

        try:
            checks = run_checks(cfg, args.out)
        except Exception as exc:  # any crash is a solver failure
            print(_error(type(exc).__name__, str(exc), command="validate"))
            return 1
        ok = all(c["passed"] for c in checks)
        print(json.dumps({"status": "ok" if ok else "failed", "checks": checks}, indent=2))
        return 0 if ok else 1
    try:
        out = run(args.command, cfg, args.out, force=args.force, jobs=cfg.jobs)
    except Exception as exc:
        print(_error(type(exc).__name__, str(exc), command=args.command))
        return 1
    failed = [p for p in out["summary"]["points"] if p["status"] == "failed"]
    if failed:
        print(_error("SolverError", f"{len(failed)} point(s) failed", command=args.command, run_dir=out["run_dir"], failures=failed))
        return 1
    print(json.dumps({"status": "ok", "run_dir": out["run_dir"], "config_hash": out["summary"]["config_hash"]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
