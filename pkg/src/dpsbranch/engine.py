"""Branch-and-bound tree search."""

from __future__ import annotations

import enum
import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .branching import (DEFAULT_K_FIRST, DEFAULT_K_SECOND, DEFAULT_MAX_PROBES, DEFAULT_PROBE_ITERS,
                        BranchContext, BranchDecision, get_rule)
from .history import ContractError, Direction, PseudocostTable, ScoreConfig
from .lp import Basis, BoundSet, LpSolution, LpSolver, LpStatus, NumericalError
from .model import INT_TOL, Problem, Sense, fractional_candidates, fractional_part, validate

log = logging.getLogger(__name__)

PRUNE_TOL = 1e-9
LEVEL1_MODES = ("all-children", "down-only")


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time-limit"
    NODE_LIMIT = "node-limit"
    GAP_LIMIT = "gap-limit"

    @property
    def solved(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED)


class Disposition(str, enum.Enum):
    PRUNED_BOUND = "pruned-bound"
    PRUNED_INFEASIBLE = "pruned-infeasible"
    INTEGRAL = "integral-incumbent"
    BRANCHED = "branched"


@dataclass
class SolveConfig:
    rule: str = "pscost"
    score: ScoreConfig = field(default_factory=ScoreConfig)
    time_limit: float = 60.0
    node_limit: int = 10_000_000
    cutoff: float | None = None
    gap_tol: float = 0.0
    seed: int = 0
    node_selection: str = "best-bound"
    level1_update: str = "all-children"
    max_probes: int = DEFAULT_MAX_PROBES
    probe_iter_limit: int = DEFAULT_PROBE_ITERS
    k_first: int = DEFAULT_K_FIRST
    k_second: int = DEFAULT_K_SECOND
    int_tol: float = INT_TOL
    trace: bool = False

    def __post_init__(self):
        get_rule(self.rule)
        if not self.time_limit > 0 or self.node_limit < 1:
            raise ValueError("limits must be positive")
        if self.gap_tol < 0:
            raise ValueError("gap tolerance must be >= 0")
        if self.node_selection not in ("best-bound", "dfs"):
            raise ValueError(f"unknown node selection {self.node_selection!r}")
        if self.level1_update not in LEVEL1_MODES:
            raise ValueError(f"level1_update must be one of {LEVEL1_MODES}")


@dataclass
class Node:
    id: int
    depth: int
    bounds: BoundSet
    parent_id: int | None = None
    parent_lp_value: float | None = None
    branch_var: int | None = None
    branch_direction: Direction | None = None
    branch_frac: float | None = None
    grandparent_attr: tuple[int, Direction, float] | None = None
    warm: Basis | None = None
    # lower bound on the node's LP value in minimization form
    key: float = -math.inf


@dataclass(frozen=True)
class Attribution:
    node_id: int
    var: int
    direction: Direction
    level: int
    obj_gain: float
    frac: float

    @property
    def datapoint(self) -> float:
        return max(self.obj_gain, 0.0) / self.frac


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float | None
    incumbent: np.ndarray | None
    dual_bound: float
    nodes: int
    time: float
    pdi: float
    events: list[tuple[float, float | None, float | None]]
    lp_iterations: int = 0
    root_lp_time: float = 0.0
    potentially_suboptimal: bool = False
    trace: list[str] = field(default_factory=list)
    attributions: list[Attribution] = field(default_factory=list)
    table: PseudocostTable | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "dual_bound": self.dual_bound,
            "nodes": self.nodes,
            "lp_iterations": self.lp_iterations,
            "potentially_suboptimal": self.potentially_suboptimal,
        }


def direction_frac(frac: float, direction: Direction) -> float:
    """Distance the branched variable moved: ``{x}`` going down, ``1 - {x}`` going up."""
    return frac if direction is Direction.DOWN else 1.0 - frac


def attribute_gains(node: Node, node_lp_value: float, table: PseudocostTable,
                    level1_update: str = "all-children") -> list[Attribution]:
    """Record the pseudocost datapoints produced by solving ``node``'s LP.

    The level-0 datapoint goes to the variable branched on to create the
    node.  The level-1 datapoint reuses the same objective gain and credits
    the variable branched on one level higher, normalized by that
    variable's own fractionality.
    """
    if node.depth < 1:
        return []
    gain = abs(node_lp_value - node.parent_lp_value)
    out = [Attribution(node.id, node.branch_var, node.branch_direction, 0, gain,
                       direction_frac(node.branch_frac, node.branch_direction))]
    if node.grandparent_attr is not None and (
            level1_update == "all-children" or node.branch_direction is Direction.DOWN):
        gvar, gdir, gfrac = node.grandparent_attr
        out.append(Attribution(node.id, gvar, gdir, 1, gain, direction_frac(gfrac, gdir)))
    for a in out:
        table.record_gain(a.var, a.direction, a.level, a.obj_gain, a.frac)
    return out


def compute_pdi(events: Sequence[tuple[float, float | None, float | None]], end_time: float,
                sense: Sense = Sense.MINIMIZE) -> float:
    """Integral over ``[0, end_time]`` of the normalized primal-dual gap.

    The gap is 1 until the first event and whenever no incumbent or no
    finite dual bound is known; it is piecewise constant between events.
    """
    prev_t = 0.0
    for t, _, _ in events:
        if t < prev_t:
            raise ContractError("event log must be sorted by time")
        prev_t = t
    if end_time < prev_t:
        raise ContractError("end_time precedes the last event")
    total = 0.0
    t_prev, g = 0.0, 1.0
    for t, primal, dual in events:
        total += g * (t - t_prev)
        t_prev, g = t, primal_dual_gap(primal, dual)
    total += g * (end_time - t_prev)
    return total


def primal_dual_gap(primal: float | None, dual: float | None) -> float:
    if primal is None or dual is None or not math.isfinite(dual) or not math.isfinite(primal):
        return 1.0
    den = max(abs(primal), abs(dual), 1e-9)
    return min(1.0, max(0.0, abs(primal - dual) / den))


class BranchAndBound:
    """State of one tree search; use :func:`solve` for the one-shot entry point."""

    def __init__(self, problem: Problem, config: SolveConfig, solver: LpSolver | None = None):
        self.problem = problem
        self.config = config
        self.sign = problem.sense.sign
        self.solver = solver or LpSolver(problem)
        self.rule = get_rule(config.rule)
        self.table = PseudocostTable(problem.n_vars)
        self.frontier: list[tuple] = []
        self.next_id = 0
        self.incumbent: np.ndarray | None = None
        self.incumbent_min = math.inf
        self.cutoff_min = math.inf if config.cutoff is None else config.cutoff * self.sign
        self.dual_min = -math.inf
        self.nodes = 0
        self.lp_iterations = 0
        self.events: list[tuple[float, float | None, float | None]] = []
        self.trace: list[str] = []
        self.attributions: list[Attribution] = []
        self.suboptimal = False
        self.t0: float | None = None
        self.last_t = 0.0
        self.root_lp_time = 0.0
        self.col_map = np.arange(problem.n_vars)

    # -- frontier -----------------------------------------------------------

    def new_node(self, **kw) -> Node:
        node = Node(id=self.next_id, **kw)
        self.next_id += 1
        return node

    def push(self, node: Node) -> None:
        if self.config.node_selection == "best-bound":
            heapq.heappush(self.frontier, (node.key, node.id, node))
        else:
            heapq.heappush(self.frontier, (-node.depth, node.id, node))

    def pop(self) -> Node:
        return heapq.heappop(self.frontier)[2]

    def frontier_bound(self) -> float:
        if not self.frontier:
            return math.inf
        if self.config.node_selection == "best-bound":
            return self.frontier[0][0]
        return min(item[2].key for item in self.frontier)

    # -- bookkeeping --------------------------------------------------------

    def now(self) -> float:
        return time.perf_counter() - self.t0

    def prunable(self, z: float) -> bool:
        inc = self.incumbent_min
        if math.isfinite(inc) and z >= inc - PRUNE_TOL:
            return True
        # a cutoff keeps solutions that attain it
        return math.isfinite(self.cutoff_min) and z > self.cutoff_min + PRUNE_TOL * (1.0 + abs(self.cutoff_min))

    def update_dual(self, t: float) -> None:
        bound = min(self.frontier_bound(), self.incumbent_min)
        if bound > self.dual_min:
            self.dual_min = bound
            self.log_event(t)

    def log_event(self, t: float) -> None:
        primal = None if not math.isfinite(self.incumbent_min) else self.incumbent_min * self.sign
        dual = None if not math.isfinite(self.dual_min) else self.dual_min * self.sign
        if self.events and self.events[-1][0] == t:
            self.events[-1] = (t, primal, dual)
        else:
            self.events.append((t, primal, dual))

    def trace_line(self, node: Node, lp: LpSolution | None, status: str) -> None:
        if not self.config.trace:
            return
        bv = "-" if node.branch_var is None else str(int(self.col_map[node.branch_var]))
        bd = "-" if node.branch_direction is None else str(node.branch_direction)
        bf = "-" if node.branch_frac is None else format(node.branch_frac, ".17g")
        pid = "-" if node.parent_id is None else str(node.parent_id)
        val = "-" if lp is None or lp.status is not LpStatus.OPTIMAL else format(lp.objective, ".17g")
        self.trace.append("\t".join([str(node.id), pid, str(node.depth), bv, bd, bf, status, val]))

    # -- node processing ----------------------------------------------------

    def solve_node_lp(self, node: Node) -> LpSolution | None:
        try:
            lp = self.solver.solve(node.bounds, warm=node.warm)
        except NumericalError:
            if node.depth == 0:
                raise
            lp = None
        if lp is not None and lp.status in (LpStatus.OPTIMAL, LpStatus.INFEASIBLE):
            return lp
        if node.depth == 0 and lp is not None:
            return lp
        # retry from a fresh basis
        try:
            retry = self.solver.solve(node.bounds)
        except NumericalError:
            retry = None
        if retry is None or retry.status not in (LpStatus.OPTIMAL, LpStatus.INFEASIBLE):
            log.warning("node %d: LP failed after cold restart, pruning", node.id)
            self.suboptimal = True
            return None
        return retry

    def process_node(self, node: Node) -> Disposition:
        if self.t0 is None:
            self.t0 = time.perf_counter()
        lp = self.solve_node_lp(node)
        t_lp = self.last_t = self.now()
        if node.depth == 0:
            self.root_lp_time = t_lp
        self.nodes += 1
        if lp is None:
            self.trace_line(node, None, "failed")
            return Disposition.PRUNED_INFEASIBLE
        self.lp_iterations += lp.iterations
        if lp.status is LpStatus.INFEASIBLE:
            self.trace_line(node, lp, "infeasible")
            return Disposition.PRUNED_INFEASIBLE
        if lp.status is LpStatus.UNBOUNDED:
            self.trace_line(node, lp, "unbounded")
            raise _Unbounded()
        if lp.status is not LpStatus.OPTIMAL:
            raise NumericalError(f"root LP ended with status {lp.status.value}")
        self.trace_line(node, lp, "optimal")

        if node.depth >= 1:
            self.attributions += attribute_gains(node, lp.objective, self.table, self.config.level1_update)

        z = lp.objective * self.sign
        if self.prunable(z):
            return Disposition.PRUNED_BOUND

        cands = fractional_candidates(self.problem, lp.primal, self.config.int_tol)
        if not cands:
            x = lp.primal.copy()
            mask = self.problem.integer_mask()
            x[mask] = np.round(x[mask])
            obj = self.problem.objective_value(x) * self.sign
            if obj < self.incumbent_min - PRUNE_TOL:
                self.incumbent_min = obj
                self.incumbent = x
                self.log_event(t_lp)
            return Disposition.INTEGRAL

        cfg = self.config
        ctx = BranchContext(self.problem, lp, cands, self.table, cfg.score, node.bounds, self.solver,
                            cfg.max_probes, cfg.probe_iter_limit, cfg.k_first, cfg.k_second, cfg.int_tol)
        decision = self.rule(ctx)
        self.last_decision = decision
        if decision.node_infeasible:
            return Disposition.PRUNED_INFEASIBLE
        self.branch(node, lp, decision)
        return Disposition.BRANCHED

    def branch(self, node: Node, lp: LpSolution, decision: BranchDecision) -> tuple[Node, Node]:
        var = decision.variable
        v = float(lp.primal[var])
        f = fractional_part(v)
        gp = None
        if node.depth >= 1:
            gp = (node.branch_var, node.branch_direction, node.branch_frac)
        z = lp.objective * self.sign
        children = []
        for direction, bounds in ((Direction.DOWN, node.bounds.tighten(self.problem, var, upper=math.floor(v))),
                                  (Direction.UP, node.bounds.tighten(self.problem, var, lower=math.ceil(v)))):
            child = self.new_node(depth=node.depth + 1, bounds=bounds, parent_id=node.id,
                                  parent_lp_value=lp.objective, branch_var=var, branch_direction=direction,
                                  branch_frac=f, grandparent_attr=gp, warm=lp.basis, key=z)
            self.push(child)
            children.append(child)
        return tuple(children)

    # -- main loop ----------------------------------------------------------

    def run(self) -> SolveResult:
        cfg = self.config
        root = self.new_node(depth=0, bounds=BoundSet())
        self.push(root)
        status = None
        try:
            while self.frontier:
                if self.t0 is not None and self.now() >= cfg.time_limit:
                    status = SolveStatus.TIME_LIMIT
                    break
                if self.nodes >= cfg.node_limit:
                    status = SolveStatus.NODE_LIMIT
                    break
                if cfg.gap_tol > 0 and math.isfinite(self.incumbent_min) and \
                        self.incumbent_min - self.dual_min <= cfg.gap_tol * (1.0 + abs(self.incumbent_min)):
                    status = SolveStatus.GAP_LIMIT
                    break
                node = self.pop()
                if node.depth > 0 and self.prunable(node.key):
                    continue
                self.process_node(node)
                self.update_dual(self.last_t)
        except _Unbounded:
            status = SolveStatus.UNBOUNDED
        end = self.now() if self.t0 is not None else 0.0
        if status is None:
            status = SolveStatus.OPTIMAL if self.incumbent is not None else SolveStatus.INFEASIBLE
            if self.incumbent is not None and self.dual_min < self.incumbent_min:
                self.dual_min = self.incumbent_min
                self.log_event(end)
        if status is SolveStatus.UNBOUNDED:
            dual = -math.inf * self.sign
        elif status is SolveStatus.INFEASIBLE:
            dual = math.inf * self.sign
        else:
            dual = self.dual_min * self.sign
        if self.events and self.events[-1][0] > end:
            end = self.events[-1][0]
        obj = None if self.incumbent is None else self.incumbent_min * self.sign
        return SolveResult(status, obj, self.incumbent, dual, self.nodes, end,
                           compute_pdi(self.events, end, self.problem.sense), self.events,
                           self.lp_iterations, self.root_lp_time, self.suboptimal,
                           self.trace, self.attributions, self.table)


class _Unbounded(Exception):
    pass


def solve(problem: Problem, config: SolveConfig | None = None) -> SolveResult:
    """Solve ``problem`` by LP-based branch and bound.

    A nonzero ``config.seed`` shuffles column and row order before solving;
    the reported incumbent and trace use the original column indices.
    """
    config = config or SolveConfig()
    validate(problem)
    cols, _ = problem.permutation(config.seed)
    work = problem.permuted(config.seed)
    bb = BranchAndBound(work, config)
    bb.col_map = cols
    result = bb.run()
    if result.incumbent is not None and config.seed != 0:
        x = np.empty_like(result.incumbent)
        x[cols] = result.incumbent
        result.incumbent = x
    return result
