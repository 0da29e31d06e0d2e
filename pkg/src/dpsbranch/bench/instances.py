"""Seeded generators for small knapsack, set-cover and assignment instances."""

from __future__ import annotations

import numpy as np

from ..model import Constraint, Problem, Relation, Sense, Variable, VarType

FAMILIES = ("knapsack", "setcover", "gap")


def knapsack(n: int = 10, dims: int = 1, seed: int = 0) -> Problem:
    """Weakly correlated 0/1 knapsack with ``dims`` capacity rows.

    Each capacity is half the total weight of its row.
    """
    if n < 1 or dims < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng([0, n, dims, seed])
    weights = rng.integers(10, 61, size=(dims, n))
    profits = np.maximum(weights.mean(axis=0).round().astype(int) + rng.integers(-8, 9, size=n), 1)
    variables = [Variable(f"x{j}", 0.0, 1.0, float(profits[j]), VarType.BINARY) for j in range(n)]
    rows = [Constraint(f"capacity{k}" if dims > 1 else "capacity",
                       {j: float(w) for j, w in enumerate(weights[k])}, Relation.LE, float(int(weights[k].sum()) // 2))
            for k in range(dims)]
    tag = f"knapsack-n{n}" + (f"-d{dims}" if dims > 1 else "")
    return Problem(f"{tag}-s{seed}", Sense.MAXIMIZE, variables, rows)


def setcover(n_elements: int = 20, n_sets: int = 40, density: float = 0.15, max_cost: int = 100,
             seed: int = 0) -> Problem:
    """Weighted set cover with costs in ``[1, max_cost]``.

    Every element lies in at least one set, so selecting all sets is a cover.
    """
    if n_elements < 1 or n_sets < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng([1, n_elements, n_sets, seed])
    cover = rng.random((n_elements, n_sets)) < density
    for i in range(n_elements):
        if not cover[i].any():
            cover[i, rng.integers(n_sets)] = True
    costs = rng.integers(1, max_cost + 1, size=n_sets)
    variables = [Variable(f"s{j}", 0.0, 1.0, float(costs[j]), VarType.BINARY) for j in range(n_sets)]
    rows = [Constraint(f"e{i}", {int(j): 1.0 for j in np.flatnonzero(cover[i])}, Relation.GE, 1.0)
            for i in range(n_elements)]
    return Problem(f"setcover-m{n_elements}-n{n_sets}-s{seed}", Sense.MINIMIZE, variables, rows)


def gap(agents: int = 3, jobs: int = 5, seed: int = 0) -> Problem:
    """Generalized assignment: each job to exactly one agent under agent capacities.

    Capacities are at least the load of a hidden random assignment, which
    keeps every instance feasible.
    """
    if agents < 1 or jobs < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng([2, agents, jobs, seed])
    cost = rng.integers(10, 51, size=(agents, jobs))
    weight = rng.integers(5, 26, size=(agents, jobs))
    hidden = rng.integers(agents, size=jobs)
    load = np.zeros(agents, dtype=int)
    for j, a in enumerate(hidden):
        load[a] += weight[a, j]
    cap = np.maximum(load, (0.8 * weight.sum(axis=1) / agents).astype(int))

    def idx(a, j):
        return a * jobs + j

    variables = [Variable(f"x{a}_{j}", 0.0, 1.0, float(cost[a, j]), VarType.BINARY)
                 for a in range(agents) for j in range(jobs)]
    rows = [Constraint(f"assign{j}", {idx(a, j): 1.0 for a in range(agents)}, Relation.EQ, 1.0)
            for j in range(jobs)]
    rows += [Constraint(f"cap{a}", {idx(a, j): float(weight[a, j]) for j in range(jobs)}, Relation.LE, float(cap[a]))
             for a in range(agents)]
    return Problem(f"gap-a{agents}-j{jobs}-s{seed}", Sense.MINIMIZE, variables, rows)


def generate_instance(family: str, seed: int = 0, **size) -> Problem:
    """Dispatch to a family generator; ``size`` holds that family's size parameters."""
    gens = {"knapsack": knapsack, "setcover": setcover, "gap": gap}
    if family not in gens:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    return gens[family](seed=seed, **size)
