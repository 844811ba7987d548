"""Command-line entry point: ``swtbounds run|sweep|validate|selftest``."""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, SwtBoundsError
from .scenarios import OUTPUT_ENV, load_config, run_scenario, sweep, validate_config


def _cmd_run(args) -> int:
    res = run_scenario(load_config(args.config))
    for path in res.paths:
        print(path)
    print(f"{res.metric_name} = {res.metric:.10g}")
    return 0


def _cmd_sweep(args) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    path, rows = sweep(load_config(args.config), args.axis, values)
    failed = sum(1 for r in rows if r[1] != "ok")
    print(path)
    print(f"{len(rows) - failed} ok, {failed} failed")
    return 0 if failed == 0 else 1


def _cmd_validate(args) -> int:
    issues = validate_config(load_config(args.config))
    for issue in issues:
        print(issue)
    if not issues:
        print("ok")
    return 1 if issues else 0


def _cmd_selftest(args) -> int:
    from .selftest import run_all
    return 0 if run_all(verbose=True) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swtbounds",
        description="Schrieffer-Wolff error-bound experiments.",
        epilog=f"Set {OUTPUT_ENV} to redirect every CSV to one directory.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one scenario config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("sweep", help="run a config for several values of one key")
    p.add_argument("config")
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma-separated list")
    p.set_defaults(func=_cmd_sweep)
    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)
    p = sub.add_parser("selftest", help="fast invariant checks; exit 1 on failure")
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        where = f" (key: {exc.key})" if exc.key else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return 2
    except (SwtBoundsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
