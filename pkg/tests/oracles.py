"""Independent reference computations used by the tests.

Nothing here calls into the simplex code: LP optima come from enumerating
basic solutions of the inequality system and MILP optima from enumerating
every integer point.
"""

import itertools
import math

import numpy as np

from dpsbranch.model import Constraint, Problem, Relation, Sense, Variable, VarType


def _inequalities(problem, bounds=None):
    a = problem.dense_matrix()
    rows, rhs = [], []
    for i, con in enumerate(problem.constraints):
        lo, hi = con.row_bounds()
        if math.isfinite(hi):
            rows.append(a[i]); rhs.append(hi)
        if math.isfinite(lo):
            rows.append(-a[i]); rhs.append(-lo)
    n = problem.n_vars
    for j, var in enumerate(problem.variables):
        lo, hi = var.lower, var.upper
        if bounds is not None:
            lo, hi = bounds.get(j, (lo, hi))
        e = np.zeros(n); e[j] = 1.0
        if math.isfinite(hi):
            rows.append(e); rhs.append(hi)
        if math.isfinite(lo):
            rows.append(-e); rhs.append(-lo)
    return np.array(rows), np.array(rhs)


def vertex_oracle(problem, bounds=None, tol=1e-9):
    """Best basic feasible solution by brute force; assumes a bounded polytope.

    Returns ``(objective, x)`` or ``(None, None)`` when no vertex is feasible.
    """
    G, h = _inequalities(problem, bounds)
    n = problem.n_vars
    c = problem.objective_vector() * problem.sense.sign
    combos = np.array(list(itertools.combinations(range(len(G)), n)))
    if len(combos) == 0:
        return None, None
    mats = G[combos]
    dets = np.linalg.det(mats)
    keep = np.abs(dets) > 1e-10
    mats, combos = mats[keep], combos[keep]
    if len(mats) == 0:
        return None, None
    xs = np.linalg.solve(mats, h[combos][..., None])[..., 0]
    slack = xs @ G.T - h
    scale = 1.0 + np.abs(h)
    feas = np.all(slack <= tol * scale, axis=1)
    if not feas.any():
        return None, None
    xs = xs[feas]
    vals = xs @ c
    k = int(np.argmin(vals))
    return float(vals[k] * problem.sense.sign), xs[k]


def enumerate_binary_optimum(problem):
    """Exhaustive optimum over all 0/1 points of a pure binary problem."""
    n = problem.n_vars
    assert all(v.is_integer and v.lower >= 0 and v.upper <= 1 for v in problem.variables)
    pts = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(float)
    lo_v, hi_v = problem.column_bounds()
    ok = np.all((pts >= lo_v) & (pts <= hi_v), axis=1)
    act = pts @ problem.dense_matrix().T
    for i, con in enumerate(problem.constraints):
        lo, hi = con.row_bounds()
        ok &= (act[:, i] >= lo - 1e-9) & (act[:, i] <= hi + 1e-9)
    if not ok.any():
        return None, None
    vals = pts[ok] @ problem.objective_vector()
    k = int(np.argmax(vals) if problem.sense is Sense.MAXIMIZE else np.argmin(vals))
    return float(vals[k]), pts[ok][k]


def random_lp(rng, max_vars=6, max_cons=5, infeasible_share=0.1):
    """Small LP with finite variable bounds and mixed row types.

    Rows are built around a random anchor point inside the bounds, so most
    instances are feasible; ``infeasible_share`` of the rows get an
    unrelated right-hand side instead.
    """
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_cons + 1))
    variables = []
    anchor = np.empty(n)
    for j in range(n):
        lo = float(rng.integers(-5, 3))
        hi = lo + float(rng.integers(0, 8))
        anchor[j] = rng.uniform(lo, hi)
        variables.append(Variable(f"x{j}", lo, hi, float(rng.normal()), VarType.CONTINUOUS))
    constraints = []
    for i in range(m):
        coeffs = {}
        for j in range(n):
            if rng.random() < 0.7:
                coeffs[j] = float(np.round(rng.normal(), 3)) or 1.0
        if not coeffs:
            coeffs[int(rng.integers(n))] = 1.0
        kind = rng.choice(["le", "le", "ge", "eq", "rng"])
        act = sum(a * anchor[j] for j, a in coeffs.items())
        if rng.random() < infeasible_share:
            act = float(np.round(rng.normal() * 3, 3))
        slack = float(np.round(abs(rng.normal()), 3))
        if kind == "le":
            constraints.append(Constraint(f"c{i}", coeffs, Relation.LE, act + slack))
        elif kind == "ge":
            constraints.append(Constraint(f"c{i}", coeffs, Relation.GE, act - slack))
        elif kind == "eq":
            constraints.append(Constraint(f"c{i}", coeffs, Relation.EQ, act))
        else:
            constraints.append(Constraint(f"c{i}", coeffs, Relation.RANGED, act - slack, slack + float(rng.integers(0, 4))))
    sense = Sense.MAXIMIZE if rng.random() < 0.5 else Sense.MINIMIZE
    return Problem(f"rand{n}x{m}", sense, variables, constraints)


def pdi_riemann(events, end_time, step=1e-3):
    """Left Riemann sum of the normalized gap at ``step`` resolution.

    Event times are snapped to the grid, so logs whose times are multiples
    of ``step`` are integrated exactly up to floating-point summation.
    """
    n_steps = int(math.ceil(end_time / step - 1e-9))
    gaps = np.ones(n_steps)
    for te, primal, dual in events:
        k = int(round(te / step))
        gaps[k:] = _gap(primal, dual)
    widths = np.full(n_steps, step)
    widths[-1] = end_time - (n_steps - 1) * step
    return float(np.dot(gaps, widths))


def _gap(primal, dual):
    if primal is None or dual is None or not math.isfinite(dual):
        return 1.0
    den = max(abs(primal), abs(dual), 1e-9)
    return min(1.0, max(0.0, abs(primal - dual) / den))


def two_level_score_oracle(problem, root_obj, var, value, k_second=3, cap=1e8, eps=1e-6):
    """Lookahead product score of ``var`` with every LP value taken from :func:`vertex_oracle`.

    Each side scores its own child gain plus the best ``min(down, up)``
    second-level gain over the child's ``k_second`` most fractional
    integer variables (ties by index).
    """
    from dpsbranch.lp import BoundSet
    from dpsbranch.model import fractional_candidates

    sign = problem.sense.sign
    sides = []
    for b in (BoundSet().tighten(problem, var, upper=math.floor(value)),
              BoundSet().tighten(problem, var, lower=math.ceil(value))):
        obj, x = vertex_oracle(problem, b)
        if obj is None:
            sides.append(cap)
            continue
        gain = max((obj - root_obj) * sign, 0.0)
        cands = sorted(fractional_candidates(problem, x), key=lambda c: (-c[1], c[0]))[:k_second]
        best = 0.0
        for y, _ in cands:
            gs = []
            for bb in (b.tighten(problem, y, upper=math.floor(x[y])), b.tighten(problem, y, lower=math.ceil(x[y]))):
                o2, _ = vertex_oracle(problem, bb)
                gs.append(math.inf if o2 is None else max((o2 - obj) * sign, 0.0))
            best = max(best, min(gs))
        sides.append(min(gain + best, cap))
    return max(sides[0], eps) * max(sides[1], eps)
