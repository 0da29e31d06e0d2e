"""Branch-and-bound MILP solver with discounted pseudocost branching."""

from .branching import RULE_NAMES, BranchContext, BranchDecision
from .engine import SolveConfig, SolveResult, SolveStatus, compute_pdi, solve
from .history import Direction, PseudocostTable, ScoreConfig, branching_score
from .lp import BoundSet, LpSolution, LpSolver, LpStatus, check_solution, solve_relaxation
from .model import (Constraint, Problem, Relation, Sense, Variable, VarType, fractional_candidates,
                    fractional_part)
from .mps import parse_mps, read_mps, write_mps

__version__ = "0.1.0"
