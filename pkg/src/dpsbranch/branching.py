"""Branching variable selection rules.

Every rule takes a :class:`BranchContext` and returns a
:class:`BranchDecision`.  Candidates are scanned in increasing variable
index and a later candidate only wins on a strictly larger score, so ties
always go to the lowest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .history import Direction, PseudocostTable, ScoreConfig, branching_score
from .lp import BoundSet, LpSolution, LpSolver, LpStatus
from .model import INT_TOL, Problem, fractional_candidates, fractional_part

INFEASIBLE_GAIN_CAP = 1e8
DEFAULT_MAX_PROBES = 100
DEFAULT_PROBE_ITERS = 500
DEFAULT_K_FIRST = 5
DEFAULT_K_SECOND = 3


@dataclass
class BranchContext:
    problem: Problem
    lp: LpSolution
    candidates: list[tuple[int, float]]
    table: PseudocostTable
    config: ScoreConfig = field(default_factory=ScoreConfig)
    bounds: BoundSet = field(default_factory=BoundSet)
    solver: LpSolver | None = None
    max_probes: int = DEFAULT_MAX_PROBES
    probe_iter_limit: int = DEFAULT_PROBE_ITERS
    k_first: int = DEFAULT_K_FIRST
    k_second: int = DEFAULT_K_SECOND
    int_tol: float = INT_TOL

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("branching needs at least one candidate")
        self.candidates = sorted(self.candidates)
        if self.solver is None:
            self.solver = LpSolver(self.problem)

    def value(self, var: int) -> float:
        return float(self.lp.primal[var])


class Probe(NamedTuple):
    down_gain: float
    up_gain: float
    down_status: LpStatus
    up_status: LpStatus
    down_lp: LpSolution
    up_lp: LpSolution

    @property
    def both_infeasible(self) -> bool:
        return self.down_status is LpStatus.INFEASIBLE and self.up_status is LpStatus.INFEASIBLE


@dataclass
class BranchDecision:
    variable: int
    down_est: float
    up_est: float
    rule_used: str
    score: float = 0.0
    delegate: str | None = None
    # the node LP is infeasible once both children of some candidate are
    node_infeasible: bool = False
    probes: dict[int, Probe] = field(default_factory=dict)
    # (variable, direction) pairs whose child LP was found infeasible
    reductions: list[tuple[int, Direction]] = field(default_factory=list)


def _argmax(scored):
    """``scored`` holds ``(score, var, down, up)`` in index order."""
    best = None
    for item in scored:
        if best is None or item[0] > best[0]:
            best = item
    return best


def _decide(scored, rule: str, **extra) -> BranchDecision:
    score, var, down, up = _argmax(scored)
    return BranchDecision(var, down, up, rule, score, **extra)


def _cap(gain: float) -> float:
    return min(gain, INFEASIBLE_GAIN_CAP)


def pseudocost_estimates(ctx: BranchContext, var: int, discounted: bool = False) -> tuple[float, float]:
    """Estimated objective gain of each child: pseudocost times distance to the new bound."""
    f = fractional_part(ctx.value(var))
    t = ctx.table
    if discounted:
        g = ctx.config.gamma
        return t.discounted_pseudocost(var, Direction.DOWN, g) * f, t.discounted_pseudocost(var, Direction.UP, g) * (1.0 - f)
    return t.pseudocost(var, Direction.DOWN, 0) * f, t.pseudocost(var, Direction.UP, 0) * (1.0 - f)


def _score_by_pseudocost(ctx: BranchContext, discounted: bool):
    eps = ctx.config.epsilon
    out = []
    for var, _ in ctx.candidates:
        down, up = pseudocost_estimates(ctx, var, discounted)
        out.append((branching_score(down, up, eps), var, down, up))
    return out


def all_reliable_both_levels(ctx: BranchContext) -> bool:
    cfg = ctx.config
    return all(ctx.table.reliable_both_ways(var, level, cfg.threshold(level))
               for var, _ in ctx.candidates for level in (0, 1))


def select_most_fractional(ctx: BranchContext) -> BranchDecision:
    scored = []
    for var, frac in ctx.candidates:
        f = fractional_part(ctx.value(var))
        scored.append((frac, var, f, 1.0 - f))
    return _decide(scored, "mostfrac")


def select_pseudocost(ctx: BranchContext) -> BranchDecision:
    return _decide(_score_by_pseudocost(ctx, discounted=False), "pscost")


def select_discounted_pseudocost(ctx: BranchContext,
                                 fallback: Callable[[BranchContext], BranchDecision] | None = None,
                                 name: str = "dpscost") -> BranchDecision:
    """Discounted pseudocost scores when every candidate is reliable at both levels.

    Otherwise the decision is delegated to ``fallback`` (plain pseudocost
    branching by default) and reported with ``rule_used == "fallback"``.
    """
    if all_reliable_both_levels(ctx):
        return _decide(_score_by_pseudocost(ctx, discounted=True), name)
    dec = (fallback or select_pseudocost)(ctx)
    dec.delegate = dec.rule_used
    dec.rule_used = "fallback"
    return dec


def _child_gain(ctx: BranchContext, child: LpSolution) -> float:
    if child.status is LpStatus.INFEASIBLE:
        return math.inf
    if child.status is not LpStatus.OPTIMAL:
        return math.nan
    sign = ctx.problem.sense.sign
    return max((child.objective - ctx.lp.objective) * sign, 0.0)


def strong_branch_eval(ctx: BranchContext, var: int) -> Probe:
    """Solve both children of ``var`` from the node basis under the probe iteration cap.

    Infeasible children report an infinite gain; children that hit the
    iteration cap report ``nan``.
    """
    v = ctx.value(var)
    p = ctx.problem
    down_b = ctx.bounds.tighten(p, var, upper=math.floor(v))
    up_b = ctx.bounds.tighten(p, var, lower=math.ceil(v))
    down = ctx.solver.solve(down_b, warm=ctx.lp.basis, iter_limit=ctx.probe_iter_limit)
    up = ctx.solver.solve(up_b, warm=ctx.lp.basis, iter_limit=ctx.probe_iter_limit)
    return Probe(_child_gain(ctx, down), _child_gain(ctx, up), down.status, up.status, down, up)


def _probe_estimates(ctx: BranchContext, var: int, probe: Probe) -> tuple[float, float]:
    down, up = probe.down_gain, probe.up_gain
    if math.isnan(down) or math.isnan(up):
        ps_down, ps_up = pseudocost_estimates(ctx, var)
        down = ps_down if math.isnan(down) else down
        up = ps_up if math.isnan(up) else up
    return down, up


def _note_infeasible(dec_reductions, var, probe):
    if probe.down_status is LpStatus.INFEASIBLE:
        dec_reductions.append((var, Direction.DOWN))
    if probe.up_status is LpStatus.INFEASIBLE:
        dec_reductions.append((var, Direction.UP))


def select_strong(ctx: BranchContext) -> BranchDecision:
    eps = ctx.config.epsilon
    probes: dict[int, Probe] = {}
    reductions: list[tuple[int, Direction]] = []
    scored = []
    for var, _ in ctx.candidates:
        if len(probes) < ctx.max_probes:
            probe = strong_branch_eval(ctx, var)
            probes[var] = probe
            _note_infeasible(reductions, var, probe)
            if probe.both_infeasible:
                return BranchDecision(var, math.inf, math.inf, "strong", math.inf,
                                      node_infeasible=True, probes=probes, reductions=reductions)
            down, up = _probe_estimates(ctx, var, probe)
        else:
            down, up = pseudocost_estimates(ctx, var)
        scored.append((branching_score(_cap(down), _cap(up), eps), var, down, up))
    return _decide(scored, "strong", probes=probes, reductions=reductions)


def _reliability_pscost(ctx: BranchContext) -> BranchDecision:
    eps = ctx.config.epsilon
    thr = ctx.config.threshold(0)
    table = ctx.table
    probes: dict[int, Probe] = {}
    reductions: list[tuple[int, Direction]] = []
    scored = []
    for var, _ in ctx.candidates:
        if not table.reliable_both_ways(var, 0, thr) and len(probes) < ctx.max_probes:
            probe = strong_branch_eval(ctx, var)
            probes[var] = probe
            _note_infeasible(reductions, var, probe)
            if probe.both_infeasible:
                return BranchDecision(var, math.inf, math.inf, "rpscost", math.inf,
                                      node_infeasible=True, probes=probes, reductions=reductions)
            f = fractional_part(ctx.value(var))
            if math.isfinite(probe.down_gain):
                table.record_gain(var, Direction.DOWN, 0, probe.down_gain, f)
            if math.isfinite(probe.up_gain):
                table.record_gain(var, Direction.UP, 0, probe.up_gain, 1.0 - f)
            down, up = _probe_estimates(ctx, var, probe)
        else:
            down, up = pseudocost_estimates(ctx, var)
        scored.append((branching_score(_cap(down), _cap(up), eps), var, down, up))
    return _decide(scored, "rpscost", probes=probes, reductions=reductions)


def select_reliability(ctx: BranchContext, use_discounted: bool = False) -> BranchDecision:
    """Reliability branching: strong branching for candidates with too few level-0 datapoints.

    With ``use_discounted`` the discounted scores are used only when every
    candidate is reliable at both levels; otherwise regular level-0
    reliability branching decides and the decision is marked as a fallback.
    """
    if use_discounted:
        return select_discounted_pseudocost(ctx, fallback=_reliability_pscost, name="rdpscost")
    return _reliability_pscost(ctx)


def _second_level_gain(ctx: BranchContext, child_bounds: BoundSet, child: LpSolution, k_second: int) -> float:
    """Best guaranteed bound improvement from branching once more inside ``child``."""
    if k_second <= 0:
        return 0.0
    cands = fractional_candidates(ctx.problem, child.primal, ctx.int_tol)
    if not cands:
        return 0.0
    cands = sorted(cands, key=lambda c: (-c[1], c[0]))[:k_second]
    sub = BranchContext(ctx.problem, child, cands, ctx.table, ctx.config, child_bounds, ctx.solver,
                        ctx.max_probes, ctx.probe_iter_limit, int_tol=ctx.int_tol)
    best = 0.0
    for var, _ in sub.candidates:
        probe = strong_branch_eval(sub, var)
        if probe.both_infeasible:
            return math.inf
        down, up = _probe_estimates(sub, var, probe)
        best = max(best, min(down, up))
    return best


def select_lookahead(ctx: BranchContext, k_first: int | None = None, k_second: int | None = None) -> BranchDecision:
    """Two-level strong branching over the best ``k_first`` strong-branching candidates.

    Each side of a first-level candidate scores as its own child gain plus
    the best second-level gain ``min(down, up)`` found among up to
    ``k_second`` of the child's most fractional candidates.
    """
    k_first = ctx.k_first if k_first is None else k_first
    k_second = ctx.k_second if k_second is None else k_second
    if k_first < 1 or k_second < 0:
        raise ValueError("lookahead needs k_first >= 1 and k_second >= 0")
    strong = select_strong(ctx)
    if strong.node_infeasible or not strong.probes:
        strong.rule_used = "lookahead"
        return strong
    eps = ctx.config.epsilon
    ranked = []
    for var, probe in strong.probes.items():
        down, up = _probe_estimates(ctx, var, probe)
        ranked.append((-branching_score(_cap(down), _cap(up), eps), var))
    ranked.sort()
    top = sorted(var for _, var in ranked[:k_first])

    p = ctx.problem
    scored = []
    for var in top:
        probe = strong.probes[var]
        v = ctx.value(var)
        sides = []
        for child, bounds in ((probe.down_lp, ctx.bounds.tighten(p, var, upper=math.floor(v))),
                              (probe.up_lp, ctx.bounds.tighten(p, var, lower=math.ceil(v)))):
            gain = _child_gain(ctx, child)
            if child.status is LpStatus.OPTIMAL:
                gain += _second_level_gain(ctx, bounds, child, k_second)
            sides.append(gain)
        down, up = sides
        if math.isnan(down) or math.isnan(up):
            ps_down, ps_up = pseudocost_estimates(ctx, var)
            down = ps_down if math.isnan(down) else down
            up = ps_up if math.isnan(up) else up
        scored.append((branching_score(_cap(down), _cap(up), eps), var, down, up))
    return _decide(scored, "lookahead", probes=strong.probes, reductions=strong.reductions)


RULE_NAMES = ("mostfrac", "pscost", "dpscost", "strong", "lookahead", "rpscost", "rdpscost")

RULES: dict[str, Callable[[BranchContext], BranchDecision]] = {
    "mostfrac": select_most_fractional,
    "pscost": select_pseudocost,
    "dpscost": select_discounted_pseudocost,
    "strong": select_strong,
    "lookahead": select_lookahead,
    "rpscost": lambda ctx: select_reliability(ctx, use_discounted=False),
    "rdpscost": lambda ctx: select_reliability(ctx, use_discounted=True),
}


def get_rule(name: str) -> Callable[[BranchContext], BranchDecision]:
    try:
        return RULES[name]
    except KeyError:
        raise ValueError(f"unknown branching rule {name!r}; choose from {', '.join(RULE_NAMES)}") from None
