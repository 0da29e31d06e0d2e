"""MILP instance representation and fractionality helpers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

INT_TOL = 1e-6


class ModelError(ValueError):
    """Raised when a problem fails validation."""


class Sense(str, enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"

    @property
    def sign(self) -> float:
        # multiplier that turns the objective into a minimization
        return 1.0 if self is Sense.MINIMIZE else -1.0


class VarType(str, enum.Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


class Relation(str, enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "="
    RANGED = "ranged"


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    obj_coeff: float = 0.0
    integrality: VarType = VarType.CONTINUOUS

    @property
    def is_integer(self) -> bool:
        return self.integrality is not VarType.CONTINUOUS


@dataclass(frozen=True)
class Constraint:
    name: str
    coefficients: Mapping[int, float]
    relation: Relation
    rhs: float
    range: float | None = None

    def row_bounds(self) -> tuple[float, float]:
        """Activity interval ``[lo, hi]``; ranged rows span ``[rhs, rhs + range]``."""
        if self.relation is Relation.LE:
            return -math.inf, self.rhs
        if self.relation is Relation.GE:
            return self.rhs, math.inf
        if self.relation is Relation.EQ:
            return self.rhs, self.rhs
        return self.rhs, self.rhs + self.range


@dataclass(frozen=True)
class Problem:
    name: str
    sense: Sense
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_cons(self) -> int:
        return len(self.constraints)

    def dense_matrix(self) -> np.ndarray:
        if self._dense is None:
            a = np.zeros((self.n_cons, self.n_vars))
            for i, con in enumerate(self.constraints):
                for j, v in con.coefficients.items():
                    a[i, j] = v
            a.setflags(write=False)
            object.__setattr__(self, "_dense", a)
        return self._dense

    def objective_vector(self) -> np.ndarray:
        return np.array([v.obj_coeff for v in self.variables], dtype=float)

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.empty(self.n_cons)
        hi = np.empty(self.n_cons)
        for i, con in enumerate(self.constraints):
            lo[i], hi[i] = con.row_bounds()
        return lo, hi

    def column_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([v.lower for v in self.variables], dtype=float)
        hi = np.array([v.upper for v in self.variables], dtype=float)
        return lo, hi

    def integer_mask(self) -> np.ndarray:
        return np.array([v.is_integer for v in self.variables], dtype=bool)

    def objective_value(self, values: Sequence[float]) -> float:
        return math.fsum(v.obj_coeff * x for v, x in zip(self.variables, values))

    def var_index(self, name: str) -> int:
        for j, v in enumerate(self.variables):
            if v.name == name:
                return j
        raise KeyError(name)

    def permutation(self, seed: int) -> tuple[np.ndarray, np.ndarray]:
        """Column and row orders used by :meth:`permuted` for ``seed``."""
        if seed == 0:
            return np.arange(self.n_vars), np.arange(self.n_cons)
        rng = np.random.default_rng(seed)
        return rng.permutation(self.n_vars), rng.permutation(self.n_cons)

    def permuted(self, seed: int) -> "Problem":
        """Copy with columns and rows shuffled by ``seed``; seed 0 is the identity.

        Position ``k`` of the result holds original column ``cols[k]`` where
        ``cols, _ = self.permutation(seed)``.
        """
        if seed == 0:
            return self
        col_perm, row_perm = self.permutation(seed)
        new_pos = np.empty(self.n_vars, dtype=int)
        new_pos[col_perm] = np.arange(self.n_vars)
        variables = [self.variables[j] for j in col_perm]
        constraints = []
        for i in row_perm:
            con = self.constraints[i]
            coeffs = {int(new_pos[j]): v for j, v in con.coefficients.items()}
            constraints.append(Constraint(con.name, dict(sorted(coeffs.items())), con.relation, con.rhs, con.range))
        return Problem(self.name, self.sense, variables, constraints)


def validate(problem: Problem) -> Problem:
    """Check structural invariants; return the problem unchanged or raise ModelError."""
    n = problem.n_vars
    seen = set()
    for v in problem.variables:
        if v.name in seen:
            raise ModelError(f"duplicate variable name {v.name!r}")
        seen.add(v.name)
        if math.isnan(v.lower) or math.isnan(v.upper) or not math.isfinite(v.obj_coeff):
            raise ModelError(f"variable {v.name!r} has non-numeric data")
        if v.lower > v.upper:
            raise ModelError(f"variable {v.name!r} has lower bound {v.lower} > upper bound {v.upper}")
        if v.integrality is VarType.BINARY and (v.lower < 0 or v.upper > 1):
            raise ModelError(f"binary variable {v.name!r} has bounds outside [0, 1]")
    seen = set()
    for con in problem.constraints:
        if con.name in seen:
            raise ModelError(f"duplicate constraint name {con.name!r}")
        seen.add(con.name)
        for j, a in con.coefficients.items():
            if not 0 <= j < n:
                raise ModelError(f"constraint {con.name!r} references variable index {j}")
            if a == 0 or not math.isfinite(a):
                raise ModelError(f"constraint {con.name!r} has invalid coefficient {a} for index {j}")
        if not math.isfinite(con.rhs):
            raise ModelError(f"constraint {con.name!r} has non-finite rhs")
        if con.relation is Relation.RANGED:
            if con.range is None or not math.isfinite(con.range) or con.range < 0:
                raise ModelError(f"ranged constraint {con.name!r} needs a finite range >= 0")
    return problem


_BELOW_ONE = math.nextafter(1.0, 0.0)


def fractional_part(v: float) -> float:
    # tiny negative v would otherwise round up to exactly 1.0
    return min(v - math.floor(v), _BELOW_ONE)


def fractional_candidates(problem: Problem, values: Sequence[float], tol: float = INT_TOL) -> list[tuple[int, float]]:
    """Integer variables whose value is more than ``tol`` from the nearest integer.

    Returns ``(index, min(f, 1 - f))`` pairs in index order.
    """
    if len(values) != problem.n_vars:
        raise ValueError("values must have one entry per variable")
    out = []
    for j, var in enumerate(problem.variables):
        if not var.is_integer:
            continue
        f = fractional_part(float(values[j]))
        frac = min(f, 1.0 - f)
        if frac > tol:
            out.append((j, frac))
    return out


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def canonical_dump(problem: Problem) -> str:
    """Deterministic text rendering used by golden tests."""
    lines = [f"name {problem.name}", f"sense {problem.sense.value}",
             f"variables {problem.n_vars}"]
    for j, v in enumerate(problem.variables):
        lines.append(f"var {j} {v.name} {v.integrality.value} {_fmt(v.lower)} {_fmt(v.upper)} {_fmt(v.obj_coeff)}")
    lines.append(f"constraints {problem.n_cons}")
    for i, c in enumerate(problem.constraints):
        rng = "-" if c.range is None else _fmt(c.range)
        terms = " ".join(f"{j}:{_fmt(a)}" for j, a in sorted(c.coefficients.items()))
        lines.append(f"con {i} {c.name} {c.relation.value} {_fmt(c.rhs)} {rng} {terms}")
    return "\n".join(lines) + "\n"
