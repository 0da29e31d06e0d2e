"""Run (instance, seed, variant) solves and persist them as JSON lines."""

from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

from ..engine import SolveConfig, solve
from ..model import Problem
from ..mps import read_mps
from .instances import generate_instance
from .stats import RunRecord

log = logging.getLogger(__name__)


def run_one(problem: Problem, seed: int, variant: str, config: SolveConfig) -> RunRecord:
    cfg = replace(config, rule=variant, seed=seed, trace=False)
    res = solve(problem, cfg)
    return RunRecord(problem.name, seed, variant, res.status.value, res.time, res.nodes, res.pdi, res.objective)


def _run_task(args):
    return run_one(*args)


def run_experiment(problems: Sequence[Problem], seeds: Sequence[int], variants: Sequence[str],
                   config: SolveConfig, jobs: int = 1) -> list[RunRecord]:
    """Solve the full cross product; records come back in (instance, seed, variant) order."""
    names = [p.name for p in problems]
    if len(set(names)) != len(names):
        raise ValueError("instance names must be unique")
    tasks = [(p, s, v, config) for p, s, v in itertools.product(problems, seeds, variants)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        records = []
        for t in tasks:
            records.append(_run_task(t))
            r = records[-1]
            log.info("%s seed=%d %s: %s nodes=%d time=%.2fs", r.instance, r.seed, r.variant, r.status, r.nodes, r.time_sec)
    return records


def load_instances(paths: Iterable[str | os.PathLike]) -> list[Problem]:
    """Read MPS files; directories contribute their ``*.mps`` files in name order."""
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(p.glob("*.mps"))
        else:
            files.append(p)
    problems = []
    for f in files:
        prob = read_mps(f)
        problems.append(prob if prob.name else replace_name(prob, f.stem))
    return problems


def replace_name(problem: Problem, name: str) -> Problem:
    return Problem(name, problem.sense, problem.variables, problem.constraints)


def write_jsonl(records: Iterable[RunRecord], path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_jsonl(path: str | os.PathLike) -> list[RunRecord]:
    with open(path) as fh:
        return [RunRecord.from_json(line) for line in fh if line.strip()]


def desk_suite(count: int = 34) -> list[Problem]:
    """Small mixed suite cycling through the three families, sized to solve in well under a second."""
    makers = [
        lambda k: generate_instance("setcover", seed=k, n_elements=50, n_sets=60, density=0.1, max_cost=4),
        lambda k: generate_instance("gap", seed=k, agents=4, jobs=10),
        lambda k: generate_instance("knapsack", seed=k, n=22, dims=3),
    ]
    return [makers[k % len(makers)](k) for k in range(count)]
