import math

import pytest
from hypothesis import given, settings, strategies as st

from dpsbranch.history import ContractError, Direction, PseudocostTable, ScoreConfig, branching_score

D, U = Direction.DOWN, Direction.UP


def test_level0_and_level1_datapoints():
    t = PseudocostTable(2)
    t.record_gain(0, D, 0, 13 - 10, 0.5)
    t.record_gain(0, D, 1, 15 - 13, 0.5)
    assert t.pseudocost(0, D, 0) == 6.0
    assert t.pseudocost(0, D, 1) == 4.0


def test_negative_gain_clamped_but_counted():
    t = PseudocostTable(1)
    t.record_gain(0, U, 0, -1e-9, 0.5)
    assert t.count[0, U, 0] == 1
    assert t.pseudocost(0, U, 0) == 0.0


def test_mean_and_defaults():
    t = PseudocostTable(3)
    assert t.pseudocost(0, D, 0) == 1.0
    t.record_gain(0, D, 0, 3.0, 0.5)
    t.record_gain(0, D, 0, 2.0, 0.5)
    assert t.pseudocost(0, D, 0) == 5.0
    t2 = PseudocostTable(3)
    t2.record_gain(1, U, 0, 1.0, 0.5)
    t2.record_gain(2, U, 0, 1.5, 0.5)
    assert t2.pseudocost(0, U, 0) == 2.5
    # the global fallback is per direction and level
    assert t2.pseudocost(0, D, 0) == 1.0
    assert t2.pseudocost(0, U, 1) == 1.0


def _table_with(ps0, ps1):
    t = PseudocostTable(1)
    t.record_gain(0, D, 0, ps0 * 0.5, 0.5)
    t.record_gain(0, D, 1, ps1 * 0.5, 0.5)
    return t


@pytest.mark.parametrize("gamma, expected", [(0.2, 6.0), (0.0, 4.0), (1.0, 14.0)])
def test_discounted_pseudocost(gamma, expected):
    assert _table_with(4, 10).discounted_pseudocost(0, D, gamma) == pytest.approx(expected, abs=1e-12)


def test_gamma_bounds():
    with pytest.raises(ContractError):
        _table_with(1, 1).discounted_pseudocost(0, D, 1.5)
    with pytest.raises(ContractError):
        ScoreConfig(gamma=-0.1)


def test_frac_contract():
    t = PseudocostTable(1)
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ContractError):
            t.record_gain(0, D, 0, 1.0, bad)


def test_reliability():
    t = PseudocostTable(1)
    for _ in range(7):
        t.record_gain(0, D, 0, 1.0, 0.5)
    assert not t.is_reliable(0, D, 0, 8)
    t.record_gain(0, D, 0, 1.0, 0.5)
    assert t.is_reliable(0, D, 0, 8)
    assert not t.is_reliable(0, D, 1, 1)
    assert not t.reliable_both_ways(0, 0, 8)


def test_per_level_threshold():
    cfg = ScoreConfig(rel_threshold=8, rel_threshold_level1=3)
    assert (cfg.threshold(0), cfg.threshold(1)) == (8, 3)
    assert ScoreConfig().threshold(1) == 8


@pytest.mark.parametrize("d, u, expected", [(2, 3, 6.0), (0, 5, 5e-6), (0, 0, 1e-12)])
def test_branching_score(d, u, expected):
    assert branching_score(d, u, 1e-6) == pytest.approx(expected, rel=1e-12)


datapoints = st.lists(st.tuples(st.floats(-1, 100, allow_nan=False),
                                st.floats(0.01, 0.99, allow_nan=False)), min_size=1, max_size=40)


@settings(max_examples=100)
@given(datapoints, st.randoms(use_true_random=False))
def test_mean_oracle_and_order_invariance(points, rnd):
    t = PseudocostTable(1)
    for g, f in points:
        t.record_gain(0, U, 0, g, f)
    oracle = math.fsum(max(g, 0.0) / f for g, f in points) / len(points)
    assert t.pseudocost(0, U, 0) == pytest.approx(oracle, rel=1e-12, abs=1e-300)
    shuffled = list(points)
    rnd.shuffle(shuffled)
    t2 = PseudocostTable(1)
    for g, f in shuffled:
        t2.record_gain(0, U, 0, g, f)
    assert t2.pseudocost(0, U, 0) == pytest.approx(t.pseudocost(0, U, 0), rel=1e-12, abs=1e-300)


@given(st.floats(0, 50), st.floats(0, 50), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_gamma(ps0, ps1, g1, g2):
    t = _table_with(ps0, ps1)
    lo, hi = sorted((g1, g2))
    assert t.discounted_pseudocost(0, D, lo) <= t.discounted_pseudocost(0, D, hi)


def test_gamma_zero_is_level0_exactly():
    t = _table_with(0.1 + 0.2, 7.7)
    assert t.discounted_pseudocost(0, D, 0.0) == t.pseudocost(0, D, 0)


def test_dump_csv():
    t = _table_with(4, 10)
    rows = t.dump_csv().splitlines()
    assert rows[0] == "variable,direction,level,count,mean"
    assert "0,down,0,1,4.0" in rows and "0,down,1,1,10.0" in rows
    assert len(rows) == 1 + 4
