"""Two-level pseudocost bookkeeping and branching scores.

Level 0 holds the classic per-unit objective gains of branching a variable.
Level 1 credits a variable with the gain observed one branching level
further down: when ``x`` is branched and then ``y`` is branched in the
child, the grandchild's gain divided by ``x``'s fractionality is recorded
for ``x``.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np

DEFAULT_GAMMA = 0.2
DEFAULT_REL_THRESHOLD = 8
DEFAULT_EPSILON = 1e-6
LEVELS = (0, 1)


class Direction(enum.IntEnum):
    DOWN = 0
    UP = 1

    def __str__(self):
        return self.name.lower()


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreConfig:
    gamma: float = DEFAULT_GAMMA
    rel_threshold: int = DEFAULT_REL_THRESHOLD
    rel_threshold_level1: int | None = None
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ContractError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.rel_threshold < 1:
            raise ContractError("rel_threshold must be >= 1")
        if self.rel_threshold_level1 is not None and self.rel_threshold_level1 < 1:
            raise ContractError("rel_threshold_level1 must be >= 1")
        if not self.epsilon > 0:
            raise ContractError("epsilon must be positive")

    def threshold(self, level: int) -> int:
        if level == 1 and self.rel_threshold_level1 is not None:
            return self.rel_threshold_level1
        return self.rel_threshold


class PseudocostTable:
    """Running sums and counts indexed by ``[variable, direction, level]``."""

    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.gain_sum = np.zeros((n_vars, 2, 2))
        self.count = np.zeros((n_vars, 2, 2), dtype=np.int64)
        self.global_sum = np.zeros((2, 2))
        self.global_count = np.zeros((2, 2), dtype=np.int64)

    def copy(self) -> "PseudocostTable":
        new = PseudocostTable(self.n_vars)
        new.gain_sum = self.gain_sum.copy()
        new.count = self.count.copy()
        new.global_sum = self.global_sum.copy()
        new.global_count = self.global_count.copy()
        return new

    def record_gain(self, var: int, direction: Direction, level: int, obj_gain: float, frac: float) -> "PseudocostTable":
        """Add the datapoint ``obj_gain / frac``; negative gains are LP noise and count as 0."""
        if not 0.0 < frac < 1.0:
            raise ContractError(f"fractionality must lie in (0, 1), got {frac}")
        if level not in LEVELS:
            raise ContractError(f"unsupported level {level}")
        unit = max(obj_gain, 0.0) / frac
        d = int(direction)
        self.gain_sum[var, d, level] += unit
        self.count[var, d, level] += 1
        self.global_sum[d, level] += unit
        self.global_count[d, level] += 1
        return self

    def pseudocost(self, var: int, direction: Direction, level: int = 0) -> float:
        d = int(direction)
        n = self.count[var, d, level]
        if n > 0:
            return float(self.gain_sum[var, d, level] / n)
        gn = self.global_count[d, level]
        if gn > 0:
            return float(self.global_sum[d, level] / gn)
        return 1.0

    def discounted_pseudocost(self, var: int, direction: Direction, gamma: float) -> float:
        if not 0.0 <= gamma <= 1.0:
            raise ContractError(f"gamma must lie in [0, 1], got {gamma}")
        ps0 = self.pseudocost(var, direction, 0)
        if gamma == 0.0:
            return ps0
        return ps0 + gamma * self.pseudocost(var, direction, 1)

    def is_reliable(self, var: int, direction: Direction, level: int, rel_threshold: int) -> bool:
        return bool(self.count[var, int(direction), level] >= rel_threshold)

    def reliable_both_ways(self, var: int, level: int, rel_threshold: int) -> bool:
        return (self.is_reliable(var, Direction.DOWN, level, rel_threshold)
                and self.is_reliable(var, Direction.UP, level, rel_threshold))

    def dump_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variable", "direction", "level", "count", "mean"])
        for j in range(self.n_vars):
            for d in Direction:
                for level in LEVELS:
                    n = int(self.count[j, d, level])
                    mean = self.gain_sum[j, d, level] / n if n else 0.0
                    w.writerow([j, str(d), level, n, repr(float(mean))])
        return buf.getvalue()


def branching_score(down_est: float, up_est: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """Product rule with a floor so that a zero side does not erase the other."""
    return max(down_est, epsilon) * max(up_est, epsilon)
