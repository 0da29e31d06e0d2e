import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpsbranch.model import (Constraint, ModelError, Problem, Relation, Sense, Variable, VarType,
                             canonical_dump, fractional_candidates, fractional_part, validate)


def _problem(types):
    variables = [Variable(f"x{j}", 0, 10, 1.0, t) for j, t in enumerate(types)]
    return Problem("p", Sense.MINIMIZE, variables, [Constraint("c", {0: 1.0}, Relation.LE, 5.0)])


@pytest.mark.parametrize("v, expected", [(2.3, 0.3), (7.0, 0.0), (-1.25, 0.75)])
def test_fractional_part_examples(v, expected):
    assert fractional_part(v) == pytest.approx(expected, abs=1e-15)


@given(st.floats(min_value=-1e12, max_value=1e12, allow_nan=False))
def test_fractional_part_reconstructs(v):
    f = fractional_part(v)
    assert 0.0 <= f < 1.0
    assert f + math.floor(v) == pytest.approx(v, rel=1e-15, abs=1e-15)


def test_fractional_candidates_examples():
    p = _problem([VarType.INTEGER, VarType.INTEGER, VarType.CONTINUOUS])
    assert fractional_candidates(p, [2.5, 3.0000001, 2.5], 1e-6) == [(0, 0.5)]


@given(st.lists(st.floats(min_value=-50, max_value=50), min_size=4, max_size=4))
def test_candidates_empty_iff_integral(values):
    p = _problem([VarType.INTEGER, VarType.BINARY, VarType.CONTINUOUS, VarType.INTEGER])
    tol = 1e-6
    integral = all(abs(values[j] - round(values[j])) <= tol for j in (0, 1, 3))
    assert (fractional_candidates(p, values, tol) == []) == integral


def test_validate_rejects_crossed_bounds():
    p = Problem("p", Sense.MINIMIZE, [Variable("x", 2, 1)], [])
    with pytest.raises(ModelError):
        validate(p)


def test_validate_rejects_bad_column_index():
    p = Problem("p", Sense.MINIMIZE, [Variable("x")], [Constraint("c", {3: 1.0}, Relation.LE, 1)])
    with pytest.raises(ModelError):
        validate(p)


def test_row_bounds_by_relation():
    assert Constraint("a", {}, Relation.LE, 3).row_bounds() == (-math.inf, 3)
    assert Constraint("a", {}, Relation.GE, 3).row_bounds() == (3, math.inf)
    assert Constraint("a", {}, Relation.EQ, 3).row_bounds() == (3, 3)
    assert Constraint("a", {}, Relation.RANGED, 3, 2).row_bounds() == (3, 5)


def test_canonical_dump_is_stable_and_precise():
    p = Problem("d", Sense.MAXIMIZE, [Variable("x", 0, math.inf, 0.1, VarType.INTEGER)],
                [Constraint("c", {0: 1 / 3}, Relation.LE, 2.0)])
    text = canonical_dump(p)
    assert text == canonical_dump(p)
    assert "0.33333333333333331" in text
    assert "inf" in text
    assert text.splitlines()[1] == "sense maximize"


def test_permutation_round_trip():
    p = _problem([VarType.INTEGER] * 5)
    cols, rows = p.permutation(3)
    q = p.permuted(3)
    assert [v.name for v in q.variables] == [p.variables[j].name for j in cols]
    assert p.permuted(0) is p
    assert sorted(cols) == list(range(5))
    assert np.array_equal(q.dense_matrix()[:, list(cols).index(0)], p.dense_matrix()[:, 0])
