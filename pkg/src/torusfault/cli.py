"""torusfault command line.

    torusfault simulate SCENARIO [SCENARIO ...] [--seed N] [--out DIR] [--format csv|jsonl]
    torusfault linkmodel sweep [--out DIR] [--format csv|jsonl]
    torusfault linkmodel optimize [--t-red W] [--l-r C] [--l-l C]
    torusfault bufbench [--out FILE] [--format csv|jsonl]
    torusfault codec-check [FIXTURES]

Exit status: 0 success, 1 assertion or check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import bufmgr, linkmodel
from .sim import (
    DEFAULT_SEED,
    FORMATS,
    ParseError,
    ValidationError,
    awareness_latency,
    check_assertions,
    findings_text,
    latency_csv,
    load_scenario,
    run_scenario,
    summary_line,
    trace_text,
)
from .wire import check_fixtures, fixture_count, load_fixtures

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CURVE_SIZES = tuple(1 << k for k in range(5, 23))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def csv_to_jsonl(text: str) -> str:
    rows = csv.DictReader(io.StringIO(text))
    return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in rows)


def _emit(text: str, fmt: str, path: Optional[Path], stdout) -> None:
    if fmt == "jsonl":
        text = csv_to_jsonl(text)
    if path is None:
        stdout.write(text)
    else:
        path.write_text(text)


def _out_dir(args) -> Optional[Path]:
    if args.out is None:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


# subcommands

def cmd_simulate(args, stdout, stderr) -> int:
    try:
        scenarios = [load_scenario(p) for p in args.scenarios]
    except FileNotFoundError as e:
        raise UsageError(f"no such scenario file: {e.filename}") from e
    except (ParseError, ValidationError) as e:
        raise UsageError(f"invalid scenario: {e}") from e
    names = [sc.name for sc in scenarios]
    if len(set(names)) != len(names):
        raise UsageError("scenario names must be unique")
    seed = args.seed

    def one(sc):
        world = run_scenario(sc, seed=seed)
        return world, awareness_latency(world), check_assertions(world)

    # each world owns all its state, so scenarios can run side by side
    with ThreadPoolExecutor(max_workers=min(len(scenarios), args.jobs)) as pool:
        results = list(pool.map(one, scenarios))

    out = _out_dir(args)
    ext = args.format
    failed = False
    for sc, (world, entries, fails) in zip(scenarios, results):
        if out is None:
            stdout.write(trace_text(world, args.format))
        else:
            (out / f"{sc.name}.trace.{ext}").write_text(trace_text(world, args.format))
            (out / f"{sc.name}.findings.{ext}").write_text(findings_text(world, args.format))
            _emit(latency_csv(entries), args.format, out / f"{sc.name}.latency.{ext}", stdout)
        print(f"{sc.name}: {summary_line(world, entries)} (seed {world.seed})", file=stderr)
        for e in entries:
            if hasattr(e, "aware_time"):
                print(f"  {e.fault_class.label} at {e.event.target}: aware after "
                      f"{e.latency_us / 1000:.3f} ms via {e.path}", file=stderr)
            else:
                print(f"  {e}", file=stderr)
        for msg in fails:
            failed = True
            print(f"  ASSERTION FAILED: {msg}", file=stderr)
    return EXIT_FAIL if failed else EXIT_OK


def _link_params(args) -> linkmodel.LinkParams:
    p = linkmodel.LinkParams()
    over = {k: v for k, v in (("t_red", args.t_red), ("l_r", args.l_r), ("l_l", args.l_l)) if v is not None}
    try:
        return replace(p, **over)
    except ValueError as e:
        raise UsageError(str(e)) from e


def cmd_linkmodel(args, stdout, stderr) -> int:
    if args.action == "sweep":
        rows = linkmodel.fifo_sweep()
        curve = linkmodel.predicted_curve(CURVE_SIZES)
        out = _out_dir(args)
        ext = args.format
        if out is None:
            _emit(linkmodel.sweep_csv(rows), args.format, None, stdout)
            stdout.write("\n")
            _emit(linkmodel.curve_csv(curve), args.format, None, stdout)
        else:
            _emit(linkmodel.sweep_csv(rows), args.format, out / f"fifo_sweep.{ext}", stdout)
            _emit(linkmodel.curve_csv(curve), args.format, out / f"bandwidth_curve.{ext}", stdout)
        return EXIT_OK
    params = _link_params(args)
    c, e_t = linkmodel.optimize_credit_interval(params)
    cont = linkmodel.continuous_credit_optimum(params)
    stdout.write(f"best C={c} e_t={e_t:.5f} (continuous optimum {cont:.2f})\n")
    return EXIT_OK


def cmd_bufbench(args, stdout, stderr) -> int:
    text = bufmgr.trace_csv(bufmgr.run_benchmark())
    _emit(text, args.format, Path(args.out) if args.out else None, stdout)
    return EXIT_OK


def cmd_codec_check(args, stdout, stderr) -> int:
    try:
        doc = load_fixtures(args.fixtures)
    except FileNotFoundError as e:
        raise UsageError(f"no such fixture file: {e.filename}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"fixture file is not JSON: {e}") from e
    fails = check_fixtures(doc)
    for msg in fails:
        print(msg, file=stderr)
    n = fixture_count(doc)
    stdout.write(f"{n - len(fails)}/{n} fixtures ok\n")
    return EXIT_FAIL if fails else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default: scenario seed, else {DEFAULT_SEED})")
    common.add_argument("--out", default=None, help="output directory (file for bufbench)")
    common.add_argument("--format", choices=FORMATS, default="csv")

    p = _Parser(prog="torusfault", description="LO|FA|MO fault-awareness toolkit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", parents=[common], help="run fault scenarios")
    s.add_argument("scenarios", nargs="+", metavar="SCENARIO")
    s.add_argument("--jobs", type=int, default=4, help="worker threads for multiple scenarios")
    s.set_defaults(func=cmd_simulate)

    lm = sub.add_parser("linkmodel", parents=[common], help="link efficiency model")
    lm.add_argument("action", choices=("sweep", "optimize"))
    lm.add_argument("--t-red", type=int, default=None)
    lm.add_argument("--l-r", type=int, default=None)
    lm.add_argument("--l-l", type=int, default=None)
    lm.set_defaults(func=cmd_linkmodel)

    b = sub.add_parser("bufbench", parents=[common], help="buffer table benchmark trace")
    b.set_defaults(func=cmd_bufbench)

    c = sub.add_parser("codec-check", parents=[common], help="verify codec fixtures")
    c.add_argument("fixtures", nargs="?", default=None, help="fixture JSON (default: shipped file)")
    c.set_defaults(func=cmd_codec_check)
    return p


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be at least 1")
        return args.func(args, stdout, stderr)
    except UsageError as e:
        print(e, file=stderr)
        return EXIT_USAGE
    except SystemExit as e:   # --help
        return EXIT_OK if not e.code else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
