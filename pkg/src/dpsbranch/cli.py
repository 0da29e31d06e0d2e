"""Command-line entry point: ``dpsbranch {solve,compare,generate,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .branching import RULE_NAMES
from .engine import LEVEL1_MODES, SolveConfig, solve
from .history import DEFAULT_GAMMA, DEFAULT_REL_THRESHOLD, ScoreConfig
from .lp import NumericalError
from .model import ModelError
from .mps import MpsError, read_mps, write_mps

EXIT_OK, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _gamma(text: str) -> float:
    try:
        g = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid gamma {text!r}") from None
    if not 0.0 <= g <= 1.0:
        raise argparse.ArgumentTypeError(f"gamma must lie in [0, 1], got {g}")
    return g


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}") from None


def _add_solver_flags(p: argparse.ArgumentParser, time_limit: float) -> None:
    p.add_argument("--gamma", type=_gamma, default=DEFAULT_GAMMA, help="discount factor in [0, 1]")
    p.add_argument("--rel-threshold", type=int, default=DEFAULT_REL_THRESHOLD)
    p.add_argument("--rel-threshold-level1", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=time_limit, help="seconds per solve")
    p.add_argument("--node-limit", type=int, default=10_000_000)
    p.add_argument("--cutoff", type=float, default=None)
    p.add_argument("--node-selection", choices=["best-bound", "dfs"], default="best-bound")
    p.add_argument("--level1-update", choices=LEVEL1_MODES, default="all-children")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpsbranch", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one MPS instance")
    p.add_argument("instance")
    p.add_argument("--rule", choices=RULE_NAMES, default="pscost")
    p.add_argument("--seed", type=int, default=0)
    _add_solver_flags(p, 60.0)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--trace", default=None, help="write the node trace (TSV) here")

    p = sub.add_parser("compare", help="run two rules over instances x seeds and report")
    p.add_argument("--baseline", choices=RULE_NAMES, required=True)
    p.add_argument("--test", choices=RULE_NAMES, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--instances", nargs="+", help="MPS files or directories")
    src.add_argument("--desk-suite", type=int, metavar="COUNT",
                     help="use COUNT built-in generated instances instead of files")
    p.add_argument("--seeds", type=_seeds, default=[1, 2, 3])
    p.add_argument("--jobs", type=int, default=1)
    _add_solver_flags(p, 300.0)
    p.add_argument("--records", default=None, help="JSON-lines file for the run records")
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.add_argument("--pdi", action="store_true", help="add the PDI(100) columns")
    p.add_argument("--output", "-o", default=None)

    p = sub.add_parser("generate", help="write generated instances as MPS files")
    p.add_argument("--family", choices=["knapsack", "setcover", "gap"], required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="seed of the first instance")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=10, help="knapsack items")
    p.add_argument("--dims", type=int, default=1, help="knapsack capacity rows")
    p.add_argument("--elements", type=int, default=20, help="set cover elements")
    p.add_argument("--sets", type=int, default=40, help="set cover sets")
    p.add_argument("--density", type=float, default=0.15)
    p.add_argument("--max-cost", type=int, default=100)
    p.add_argument("--agents", type=int, default=3)
    p.add_argument("--gap-jobs", type=int, default=5, help="assignment jobs")

    p = sub.add_parser("report", help="rebuild the comparison table from JSON-lines records")
    p.add_argument("records")
    p.add_argument("--baseline", choices=RULE_NAMES, required=True)
    p.add_argument("--test", choices=RULE_NAMES, required=True)
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.add_argument("--pdi", action="store_true")
    p.add_argument("--output", "-o", default=None)
    return parser


def _config(args, rule: str, seed: int = 0, trace: bool = False) -> SolveConfig:
    try:
        score = ScoreConfig(gamma=args.gamma, rel_threshold=args.rel_threshold,
                            rel_threshold_level1=args.rel_threshold_level1)
        return SolveConfig(rule=rule, score=score, time_limit=args.time_limit, node_limit=args.node_limit,
                           cutoff=args.cutoff, seed=seed, node_selection=args.node_selection,
                           level1_update=args.level1_update, trace=trace)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _read(path: str):
    try:
        return read_mps(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (MpsError, ModelError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def cmd_solve(args) -> int:
    problem = _read(args.instance)
    cfg = _config(args, args.rule, args.seed, trace=bool(args.trace))
    res = solve(problem, cfg)
    if args.trace:
        Path(args.trace).write_text("".join(line + "\n" for line in res.trace))
    # run parameters and wall-clock fields live under "metadata" so the solution part
    # compares byte-for-byte across runs and across equivalent rule settings
    payload = {"instance": problem.name or Path(args.instance).stem,
               **{k: _finite(v) for k, v in res.summary().items()},
               "metadata": {"rule": args.rule, "gamma": args.gamma, "time_sec": res.time, "pdi": res.pdi}}
    if args.format == "json":
        _emit(json.dumps(payload, indent=2, allow_nan=False) + "\n", args.output)
    else:
        obj = "-" if res.objective is None else format(res.objective, ".10g")
        text = (f"instance   {payload['instance']}\n"
                f"rule       {args.rule}\n"
                f"status     {res.status.value}\n"
                f"objective  {obj}\n"
                f"dual bound {res.dual_bound:.10g}\n"
                f"nodes      {res.nodes}\n"
                f"time       {res.time:.3f} s\n"
                f"PDI        {res.pdi:.6f}\n")
        _emit(text, args.output)
    return EXIT_OK


def cmd_compare(args) -> int:
    from .bench.runner import desk_suite, load_instances, run_experiment, write_jsonl
    from .bench.stats import compare_report

    if args.desk_suite is not None:
        if args.desk_suite < 1:
            raise UsageError("--desk-suite must be >= 1")
        problems = desk_suite(args.desk_suite)
    else:
        try:
            problems = load_instances(args.instances)
        except OSError as exc:
            raise UsageError(f"cannot read instances: {exc}") from exc
        except (MpsError, ModelError) as exc:
            raise UsageError(str(exc)) from exc
    if not problems:
        raise UsageError("no instances found")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    cfg = _config(args, args.baseline)
    records = run_experiment(problems, args.seeds, [args.baseline, args.test], cfg, jobs=args.jobs)
    if args.records:
        write_jsonl(records, args.records)
    report = compare_report(records, args.baseline, args.test, args.time_limit, with_pdi=args.pdi)
    _emit(_render(report, args.format), args.output)
    return EXIT_OK


def _render(report, fmt: str) -> str:
    if fmt == "csv":
        return report.to_csv()
    if fmt == "json":
        return report.to_json() + "\n"
    return report.to_text()


def cmd_generate(args) -> int:
    from .bench.instances import generate_instance

    if args.count < 1:
        raise UsageError("--count must be >= 1")
    size = {"knapsack": dict(n=args.n, dims=args.dims),
            "setcover": dict(n_elements=args.elements, n_sets=args.sets, density=args.density,
                             max_cost=args.max_cost),
            "gap": dict(agents=args.agents, jobs=args.gap_jobs)}[args.family]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        try:
            problem = generate_instance(args.family, seed=args.seed + k, **size)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        path = out / f"{problem.name}.mps"
        path.write_text(write_mps(problem))
        print(path)
    return EXIT_OK


def cmd_report(args) -> int:
    from .bench.runner import read_jsonl
    from .bench.stats import compare_report

    try:
        records = read_jsonl(args.records)
    except OSError as exc:
        raise UsageError(f"cannot read {args.records}: {exc.strerror or exc}") from exc
    except (ValueError, KeyError) as exc:
        raise UsageError(f"malformed records file: {exc}") from exc
    try:
        report = compare_report(records, args.baseline, args.test, args.time_limit, with_pdi=args.pdi)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(_render(report, args.format), args.output)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "compare": cmd_compare, "generate": cmd_generate, "report": cmd_report}


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dpsbranch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, RuntimeError) as exc:
        print(f"dpsbranch: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
