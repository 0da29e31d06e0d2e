"""Bounded-variable revised simplex for LP relaxations.

Rows are turned into equalities ``A x - s = 0`` with one logical column
``s_i`` per row carrying the row's activity bounds, so every constraint type
(and every branching bound) is a simple bound.  A cold solve runs primal
simplex (composite phase 1) from the all-logical basis; a warm solve repairs
the previous basis against the new bounds and runs dual simplex.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .model import Problem

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100
BLAND_AFTER = 1000
DEFAULT_ITER_LIMIT = 100_000

BASIC, AT_LOWER, AT_UPPER, AT_ZERO = 0, 1, 2, 3


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


class NumericalError(RuntimeError):
    """The simplex could not certify its answer even after refactorization."""


class BoundSet:
    """Sparse per-variable bound overrides on top of a problem's own bounds."""

    __slots__ = ("_over",)

    def __init__(self, overrides: Mapping[int, tuple[float, float]] | None = None):
        self._over: dict[int, tuple[float, float]] = dict(overrides or {})

    @property
    def overrides(self) -> dict[int, tuple[float, float]]:
        return dict(self._over)

    def get(self, j: int, default: tuple[float, float]) -> tuple[float, float]:
        return self._over.get(j, default)

    def with_bounds(self, j: int, lower: float, upper: float) -> "BoundSet":
        new = BoundSet(self._over)
        new._over[j] = (lower, upper)
        return new

    def tighten(self, problem: Problem, j: int, lower: float | None = None, upper: float | None = None) -> "BoundSet":
        var = problem.variables[j]
        lo, hi = self._over.get(j, (var.lower, var.upper))
        if lower is not None:
            lo = max(lo, lower)
        if upper is not None:
            hi = min(hi, upper)
        return self.with_bounds(j, lo, hi)

    def consistent(self) -> bool:
        return all(lo <= hi for lo, hi in self._over.values())

    def __eq__(self, other):
        return isinstance(other, BoundSet) and self._over == other._over

    def __len__(self):
        return len(self._over)

    def __repr__(self):
        return f"BoundSet({self._over!r})"


@dataclass(frozen=True)
class Basis:
    """Opaque warm-start handle: basic column indices and nonbasic statuses."""
    head: tuple[int, ...]
    status: bytes


@dataclass
class LpSolution:
    status: LpStatus
    objective: float
    primal: np.ndarray
    basis: Basis | None
    iterations: int
    # duals are for the internal minimization form (objective times sense.sign)
    row_duals: np.ndarray | None = field(default=None, repr=False)
    reduced_costs: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class SolutionCheck:
    max_row_violation: float
    max_bound_violation: float

    @property
    def max_violation(self) -> float:
        return max(self.max_row_violation, self.max_bound_violation)


class LpSolver:
    """Reusable simplex engine for one problem.

    Not thread-safe; create one instance per thread.
    """

    def __init__(self, problem: Problem, feas_tol: float = FEAS_TOL, opt_tol: float = OPT_TOL,
                 refactor_every: int = REFACTOR_EVERY, bland_after: int = BLAND_AFTER):
        self.problem = problem
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.refactor_every = refactor_every
        self.bland_after = bland_after
        m, n = problem.n_cons, problem.n_vars
        self.m, self.n = m, n
        a = problem.dense_matrix()
        self.A = np.hstack([a, -np.eye(m)])
        self.cost = np.concatenate([problem.objective_vector() * problem.sense.sign, np.zeros(m)])
        col_lo, col_hi = problem.column_bounds()
        row_lo, row_hi = problem.row_bounds()
        self.base_lo = np.concatenate([col_lo, row_lo])
        self.base_hi = np.concatenate([col_hi, row_hi])

    # -- public -------------------------------------------------------------

    def solve(self, bounds: BoundSet | None = None, warm: Basis | None = None,
              iter_limit: int = DEFAULT_ITER_LIMIT) -> LpSolution:
        lo = self.base_lo.copy()
        hi = self.base_hi.copy()
        if bounds is not None:
            for j, (l, u) in bounds.overrides.items():
                lo[j], hi[j] = l, u
        self.lo, self.hi = lo, hi
        self.iters = 0
        self.iter_limit = iter_limit
        if np.any(lo > hi):
            return LpSolution(LpStatus.INFEASIBLE, math.inf * self.problem.sense.sign,
                              np.full(self.n, np.nan), None, 0)

        loaded = warm is not None and self._load_basis(warm)
        if not loaded:
            self._slack_basis()
        status = None
        if loaded and self._make_dual_feasible():
            status = self._dual()
        if status is None:
            status = self._primal()
        if status is LpStatus.OPTIMAL:
            status = self._certify()
        return self._result(status)

    # -- basis management ---------------------------------------------------

    def _slack_basis(self) -> None:
        n, m = self.n, self.m
        self.head = np.arange(n, n + m)
        self.status = np.full(n + m, AT_LOWER, dtype=np.int8)
        self.status[self.head] = BASIC
        self.x = np.zeros(n + m)
        for j in range(n):
            self._place_nonbasic(j)
        self._refactor()

    def _place_nonbasic(self, j: int, prefer: int | None = None) -> None:
        lo, hi = self.lo[j], self.hi[j]
        st = prefer if prefer is not None else self.status[j]
        if st == AT_UPPER and math.isfinite(hi):
            self.status[j], self.x[j] = AT_UPPER, hi
        elif math.isfinite(lo):
            self.status[j], self.x[j] = AT_LOWER, lo
        elif math.isfinite(hi):
            self.status[j], self.x[j] = AT_UPPER, hi
        else:
            self.status[j], self.x[j] = AT_ZERO, 0.0

    def _load_basis(self, warm: Basis) -> bool:
        head = np.array(warm.head, dtype=int)
        status = np.frombuffer(warm.status, dtype=np.int8).copy()
        if len(head) != self.m or len(status) != self.n + self.m:
            return False
        self.head, self.status = head, status
        self.x = np.zeros(self.n + self.m)
        for j in np.flatnonzero(status != BASIC):
            self._place_nonbasic(int(j))
        try:
            self._refactor()
        except np.linalg.LinAlgError:
            return False
        return True

    def _refactor(self) -> None:
        B = self.A[:, self.head]
        self.Binv = np.linalg.inv(B) if self.m else np.zeros((0, 0))
        self.since_refactor = 0
        self._recompute_basics()

    def _recompute_basics(self) -> None:
        xn = self.x.copy()
        xn[self.head] = 0.0
        self.x[self.head] = self.Binv @ (-(self.A @ xn))

    def _pivot(self, r: int, q: int, alpha: np.ndarray) -> None:
        self.head[r] = q
        self.status[q] = BASIC
        piv = alpha[r]
        row = self.Binv[r, :] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r, :] = row
        self.since_refactor += 1
        if self.since_refactor >= self.refactor_every:
            self._refactor()

    def _duals(self, cb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = self.Binv.T @ cb
        return y, self.cost - self.A.T @ y

    # -- dual simplex -------------------------------------------------------

    def _make_dual_feasible(self) -> bool:
        _, d = self._duals(self.cost[self.head])
        tol = self.opt_tol
        changed = False
        for j in np.flatnonzero(self.status != BASIC):
            st = self.status[j]
            if self.lo[j] == self.hi[j]:
                continue
            if st == AT_LOWER and d[j] < -tol:
                if not math.isfinite(self.hi[j]):
                    return False
                self.status[j], self.x[j] = AT_UPPER, self.hi[j]
                changed = True
            elif st == AT_UPPER and d[j] > tol:
                if not math.isfinite(self.lo[j]):
                    return False
                self.status[j], self.x[j] = AT_LOWER, self.lo[j]
                changed = True
            elif st == AT_ZERO and abs(d[j]) > tol:
                return False
        if changed:
            self._recompute_basics()
        return True

    def _dual(self) -> LpStatus | None:
        """Run dual simplex; ``None`` means hand over to primal simplex."""
        ftol, ptol = self.feas_tol, PIVOT_TOL
        degenerate = 0
        confirmed = False
        while True:
            xb = self.x[self.head]
            lob, hib = self.lo[self.head], self.hi[self.head]
            below = lob - xb
            above = xb - hib
            viol = np.maximum(below, above)
            bland = degenerate >= self.bland_after
            if bland:
                cand = np.flatnonzero(viol > ftol)
                if len(cand) == 0:
                    return None
                r = int(cand[np.argmin(self.head[cand])])
            else:
                r = int(np.argmax(viol)) if len(viol) else 0
                if not len(viol) or viol[r] <= ftol:
                    return None
            if self.iters >= self.iter_limit:
                return LpStatus.ITERATION_LIMIT
            s = 1.0 if below[r] > above[r] else -1.0
            _, d = self._duals(self.cost[self.head])
            alpha_r = self.Binv[r, :] @ self.A
            nb = self.status != BASIC
            sa = s * alpha_r
            movable = nb & (self.lo != self.hi)
            elig = movable & (
                ((self.status == AT_LOWER) & (sa < -ptol))
                | ((self.status == AT_UPPER) & (sa > ptol))
                | ((self.status == AT_ZERO) & (np.abs(alpha_r) > ptol)))
            idx = np.flatnonzero(elig)
            if len(idx) == 0:
                if not confirmed:
                    self._refactor()
                    confirmed = True
                    continue
                return LpStatus.INFEASIBLE
            confirmed = False
            dj = d[idx]
            st = self.status[idx]
            dj = np.where(st == AT_LOWER, np.maximum(dj, 0.0),
                          np.where(st == AT_UPPER, np.minimum(dj, 0.0), dj))
            absd = np.abs(dj)
            absa = np.abs(alpha_r[idx])
            ratios = absd / absa
            if bland:
                tmin = ratios.min()
                pick = np.flatnonzero(ratios <= tmin + 1e-12)
                k = int(pick[0])
            else:
                tmax = np.min((absd + self.opt_tol) / absa)
                pick = np.flatnonzero(ratios <= tmax)
                k = int(pick[np.argmax(absa[pick])])
            q = int(idx[k])
            t = ratios[k]
            degenerate = degenerate + 1 if t <= 1e-12 else 0

            alpha_q = self.Binv @ self.A[:, q]
            if abs(alpha_q[r]) < ptol:
                self._refactor()
                continue
            leaving = self.head[r]
            target = self.lo[leaving] if s > 0 else self.hi[leaving]
            delta = (self.x[leaving] - target) / alpha_q[r]
            self.x[self.head] -= alpha_q * delta
            self.x[q] += delta
            self._pivot(r, q, alpha_q)
            self.status[leaving] = AT_LOWER if s > 0 else AT_UPPER
            self.x[leaving] = target
            self.iters += 1
            if self.since_refactor == 0:
                self._recompute_basics()

    # -- primal simplex -----------------------------------------------------

    def _primal(self) -> LpStatus:
        ftol, otol, ptol = self.feas_tol, self.opt_tol, PIVOT_TOL
        degenerate = 0
        confirmed = False
        n_all = self.n + self.m
        while True:
            xb = self.x[self.head]
            lob, hib = self.lo[self.head], self.hi[self.head]
            below = xb < lob - ftol
            above = xb > hib + ftol
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                y = self.Binv.T @ cb
                d = -(self.A.T @ y)
            else:
                _, d = self._duals(self.cost[self.head])

            st = self.status
            movable = (st != BASIC) & (self.lo != self.hi)
            elig = movable & (((st == AT_LOWER) & (d < -otol))
                              | ((st == AT_UPPER) & (d > otol))
                              | ((st == AT_ZERO) & (np.abs(d) > otol)))
            idx = np.flatnonzero(elig)
            if len(idx) == 0:
                if not confirmed:
                    # recheck on a fresh factorization before concluding
                    self._refactor()
                    confirmed = True
                    continue
                return LpStatus.INFEASIBLE if phase1 else LpStatus.OPTIMAL
            confirmed = False
            if self.iters >= self.iter_limit:
                return LpStatus.ITERATION_LIMIT
            bland = degenerate >= self.bland_after
            q = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.Binv @ self.A[:, q]
            rate = -direction * alpha
            # ratio test: each basic variable's target bound along the ray
            target = np.full(self.m, np.nan)
            dec = rate < -ptol
            inc = rate > ptol
            feas = ~(below | above)
            target[dec & feas] = lob[dec & feas]
            target[dec & above] = hib[dec & above]
            target[inc & feas] = hib[inc & feas]
            target[inc & below] = lob[inc & below]
            limited = np.isfinite(target)
            rows = np.flatnonzero(limited)
            t_flip = self.hi[q] - self.lo[q]
            if len(rows) == 0 and not math.isfinite(t_flip):
                if phase1:
                    if not confirmed:
                        self._refactor()
                        confirmed = True
                        continue
                    raise NumericalError("phase 1 ray is unbounded")
                return LpStatus.UNBOUNDED

            leave_r = -1
            t = math.inf
            if len(rows):
                rr = rate[rows]
                exact = np.maximum((target[rows] - xb[rows]) / rr, 0.0)
                if bland:
                    tmin = exact.min()
                    ties = np.flatnonzero(exact <= tmin + 1e-12)
                    k = int(ties[np.argmin(self.head[rows[ties]])])
                else:
                    relaxed = np.maximum((target[rows] + np.sign(rr) * ftol - xb[rows]) / rr, 0.0)
                    tmax = relaxed.min()
                    pick = np.flatnonzero(exact <= tmax)
                    k = int(pick[np.argmax(np.abs(rr[pick]))])
                leave_r = int(rows[k])
                t = float(exact[k])
            if math.isfinite(t_flip) and t_flip <= t:
                # bound flip of the entering variable, basis unchanged
                t = t_flip
                leave_r = -1
            degenerate = degenerate + 1 if t <= 1e-12 else 0

            self.x[self.head] += rate * t
            self.iters += 1
            if leave_r < 0:
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
                self._recompute_basics()
                continue
            self.x[q] += direction * t
            leaving = self.head[leave_r]
            tb = target[leave_r]
            self._pivot(leave_r, q, alpha)
            self.status[leaving] = AT_LOWER if tb == self.lo[leaving] else AT_UPPER
            self.x[leaving] = tb
            if self.since_refactor == 0:
                self._recompute_basics()

    # -- certification ------------------------------------------------------

    def _primal_violation(self) -> float:
        xb = self.x[self.head]
        lob, hib = self.lo[self.head], self.hi[self.head]
        v = np.maximum(lob - xb, xb - hib)
        return float(v.max()) if len(v) else 0.0

    def _certify(self) -> LpStatus:
        for _ in range(2):
            self._refactor()
            if self._primal_violation() <= self.feas_tol:
                _, d = self._duals(self.cost[self.head])
                st = self.status
                bad = ((st == AT_LOWER) & (d < -self.opt_tol) & (self.lo != self.hi)) \
                    | ((st == AT_UPPER) & (d > self.opt_tol) & (self.lo != self.hi)) \
                    | ((st == AT_ZERO) & (np.abs(d) > self.opt_tol))
                if not bad.any():
                    return LpStatus.OPTIMAL
            status = self._primal()
            if status is not LpStatus.OPTIMAL:
                return status
        raise NumericalError("could not certify optimality after refactorization")

    def _result(self, status: LpStatus) -> LpSolution:
        n = self.n
        primal = self.x[:n].copy()
        basis = Basis(tuple(int(h) for h in self.head), self.status.tobytes())
        sign = self.problem.sense.sign
        if status is LpStatus.OPTIMAL or status is LpStatus.ITERATION_LIMIT:
            obj = self.problem.objective_value(primal)
        elif status is LpStatus.UNBOUNDED:
            obj = -math.inf * sign
        else:
            obj = math.inf * sign
        y, d = self._duals(self.cost[self.head])
        return LpSolution(status, obj, primal, basis, self.iters, y, d)


def solve_relaxation(problem: Problem, bounds: BoundSet | None = None, warm: Basis | None = None,
                     iter_limit: int = DEFAULT_ITER_LIMIT) -> LpSolution:
    return LpSolver(problem).solve(bounds, warm, iter_limit)


def check_solution(problem: Problem, bounds: BoundSet | None, solution: LpSolution,
                   feas_tol: float = FEAS_TOL) -> SolutionCheck:
    """Maximum row and bound violations of ``solution.primal``.

    ``feas_tol`` is accepted for symmetry with the solver; the raw violations
    are reported and callers compare them against it.
    """
    x = np.asarray(solution.primal, dtype=float)
    col_lo, col_hi = problem.column_bounds()
    if bounds is not None:
        for j, (l, u) in bounds.overrides.items():
            col_lo[j], col_hi[j] = l, u
    bound_v = np.maximum(col_lo - x, x - col_hi)
    row_lo, row_hi = problem.row_bounds()
    act = problem.dense_matrix() @ x
    row_v = np.maximum(row_lo - act, act - row_hi)
    return SolutionCheck(float(row_v.max(initial=0.0)), float(bound_v.max(initial=0.0)))


def dual_objective(problem: Problem, bounds: BoundSet | None, solution: LpSolution) -> float:
    """Lagrangian dual bound from the final basis, in the problem's own sense."""
    d = solution.reduced_costs
    col_lo, col_hi = problem.column_bounds()
    if bounds is not None:
        for j, (l, u) in bounds.overrides.items():
            col_lo[j], col_hi[j] = l, u
    row_lo, row_hi = problem.row_bounds()
    lo = np.concatenate([col_lo, row_lo])
    hi = np.concatenate([col_hi, row_hi])
    total = 0.0
    for j, dj in enumerate(d):
        if dj > 0:
            total += dj * lo[j]
        elif dj < 0:
            total += dj * hi[j]
    return total * problem.sense.sign


def basis_dump(problem: Problem, basis: Basis) -> str:
    """Per-column basis status as text, for debugging."""
    names = [v.name for v in problem.variables] + [c.name for c in problem.constraints]
    labels = {BASIC: "B", AT_LOWER: "L", AT_UPPER: "U", AT_ZERO: "Z"}
    status = np.frombuffer(basis.status, dtype=np.int8)
    return "\n".join(f"{name}\t{labels[int(s)]}" for name, s in zip(names, status)) + "\n"
