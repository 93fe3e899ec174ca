"""Command-line entry point.

    adhesim run --scenario <name|path> [--dt X] [--T X] [--mode march|picard]
                [--rhs full|double_cutoff|simple_cutoff] [--out DIR]
    adhesim study --scenario <name|path> --levels N [--out DIR]
    adhesim report --run DIR [--format text|json]

Exit codes: 0 all diagnostics passed, 2 at least one failed, 3 configuration
or solver error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import errors
from .config import load_scenario
from .runner import refinement_study, run_many, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adhesim",
        description="Age-structured adhesion simulator with built-in "
                    "verification diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one or more scenarios")
    run.add_argument("--scenario", action="append", required=True,
                     help="preset name or JSON config path (repeatable)")
    run.add_argument("--dt", type=float, default=None)
    run.add_argument("--T", type=float, default=None)
    run.add_argument("--mode", choices=("march", "picard", "delay"),
                     default=None, help="coupling driver")
    run.add_argument("--rhs", choices=("full", "double_cutoff", "simple_cutoff"),
                     default=None, help="right-hand-side variant")
    run.add_argument("--out", default="out", help="output root directory")
    run.add_argument("--quiet", action="store_true")

    study = sub.add_parser("study", help="grid-refinement convergence study")
    study.add_argument("--scenario", required=True)
    study.add_argument("--levels", type=int, required=True)
    study.add_argument("--dt", type=float, default=None)
    study.add_argument("--T", type=float, default=None)
    study.add_argument("--out", default="out")

    report = sub.add_parser("report", help="re-render a stored report")
    report.add_argument("--run", required=True, help="run output directory")
    report.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def _render_report_dict(data: dict) -> str:
    lines = [f"scenario: {data['scenario']}  "
             f"[{data['coupling']}/{data['variant']}]",
             f"regime: {data['regime']}   terminated: {data['terminated']}"]
    if data.get("tearoff_time") is not None:
        lines.append(f"tear-off detected at t* = {data['tearoff_time']:.6g}")
    lines.append("checks:")
    for c in data["checks"]:
        status = "PASS" if c["pass"] else "FAIL"
        line = (f"  [{status}] {c['check']:28s} anchor={c['anchor']:24s} "
                f"margin={c['margin']:+.3e} tol={c['tolerance']:.1e}")
        if c.get("note"):
            line += f"  ({c['note']})"
        lines.append(line)
    for note in data.get("notes", []):
        lines.append(f"note: {note}")
    return "\n".join(lines)


def _cmd_run(args) -> int:
    scenarios = [load_scenario(ref, dt=args.dt, T=args.T, coupling=args.mode,
                               variant=args.rhs)
                 for ref in args.scenario]
    results = run_many(scenarios, args.out)
    code = 0
    for res in results:
        if not args.quiet:
            print(res.report.to_text())
            print(f"artifacts: {res.out_dir}")
        code = max(code, res.exit_code)
    return code


def _cmd_study(args) -> int:
    scenario = load_scenario(args.scenario, dt=args.dt, T=args.T)
    result = refinement_study(scenario, args.levels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.write_csv(out / f"study_{scenario.name}.csv")
    print(result.to_text())
    if result.exact:
        return 0
    good = all(o >= 0.8 for o in result.mu0_orders) if result.mu0_orders else True
    return 0 if good else 2


def _cmd_report(args) -> int:
    path = Path(args.run) / "report.json"
    if not path.is_file():
        raise errors.ConfigNotFound(f"no report.json under {args.run!r}")
    data = json.loads(path.read_text())
    if args.format == "json":
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(_render_report_dict(data))
    all_passed = all(c["pass"] for c in data["checks"])
    return 0 if all_passed else 2


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "study":
            return _cmd_study(args)
        return _cmd_report(args)
    except (errors.ConfigNotFound, errors.ConfigInvalid) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except errors.SimulationError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
