import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpsbranch.bench import instances, stats
from dpsbranch.bench.runner import desk_suite, load_instances, read_jsonl, run_experiment, write_jsonl
from dpsbranch.bench.stats import (RunRecord, affected_filter, bracket_filter, compare_report, match_pairs,
                                   shifted_geomean)
from dpsbranch.engine import SolveConfig, solve
from dpsbranch.mps import write_mps

from oracles import enumerate_binary_optimum


def rec(inst, variant, status="optimal", t=1.0, nodes=10, pdi=0.5, seed=1, obj=1.0):
    return RunRecord(inst, seed, variant, status, t, nodes, pdi, obj)


def test_shifted_geomean_examples():
    assert shifted_geomean([3, 8], 1) == 5.0
    assert shifted_geomean([7.5] * 9, 10) == pytest.approx(7.5, rel=1e-15)
    assert shifted_geomean([0], 100) == 0.0
    with pytest.raises(ValueError):
        shifted_geomean([], 1)


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=20), st.floats(0.01, 1000), st.randoms(use_true_random=False))
def test_shifted_geomean_properties(vals, shift, rnd):
    g = shifted_geomean(vals, shift)
    tol = 1e-9 * (max(vals) + shift)
    assert min(vals) - tol <= g <= max(vals) + tol
    shuffled = list(vals)
    rnd.shuffle(shuffled)
    assert shifted_geomean(shuffled, shift) == pytest.approx(g, rel=1e-12, abs=1e-12)
    bumped = list(vals)
    bumped[0] += 1.0
    assert shifted_geomean(bumped, shift) >= g - tol


def pair(tb, tt, sb="optimal", st_="optimal", nb=100, nt=100):
    return (rec("i", "b", sb, tb, nb), rec("i", "t", st_, tt, nt))


def test_bracket_filter_examples():
    assert bracket_filter([pair(50, 120)], 100) == [pair(50, 120)]
    assert bracket_filter([pair(50, 80)], 100) == []
    assert len(bracket_filter([pair(3600, 20, sb="time-limit")], 1000, time_limit=3600)) == 1


def test_affected_filter_examples():
    assert affected_filter([pair(1, 1)]) == []
    assert len(affected_filter([pair(1, 1, nt=101)])) == 1
    assert len(affected_filter([pair(1, 1, st_="time-limit")])) == 1


def fixture_records():
    return [
        rec("a", "base", "optimal", 3.0, 100, 1.0),
        rec("a", "test", "optimal", 8.0, 100, 2.0),
        rec("b", "base", "time-limit", 10.0, 400, 6.0),
        rec("b", "test", "optimal", 0.5, 50, 0.25),
    ]


def test_compare_report_hand_computed():
    rep = compare_report(fixture_records(), "base", "test", time_limit=10.0, with_pdi=True)
    all_ = rep.row("All")
    assert (all_.count, all_.solved_base, all_.solved_test) == (2, 1, 2)
    tb, tt = math.sqrt(4 * 11) - 1, math.sqrt(9 * 1.5) - 1
    nb, nt = math.sqrt(200 * 500) - 100, math.sqrt(200 * 150) - 100
    pb, pt = math.sqrt(101 * 106) - 100, math.sqrt(102 * 100.25) - 100
    assert all_.time_base == pytest.approx(tb, abs=1e-9)
    assert all_.time_ratio == pytest.approx(tt / tb, abs=1e-9)
    assert all_.node_base == pytest.approx(nb, abs=1e-9)
    assert all_.node_ratio == pytest.approx(nt / nb, abs=1e-9)
    assert all_.pdi_base == pytest.approx(pb, abs=1e-9)
    assert all_.pdi_ratio == pytest.approx(pt / pb, abs=1e-9)
    aff = rep.row("Affected")
    assert aff.count == 1
    assert aff.time_base == pytest.approx(10.0, abs=1e-9)
    assert aff.time_ratio == pytest.approx(0.5 / 10.0, abs=1e-9)
    assert [rep.row(f">={x}s").count for x in (0, 1, 10, 100, 1000)] == [2, 2, 0, 0, 0]


def test_report_against_itself():
    recs = fixture_records()
    mirror = [RunRecord(r.instance, r.seed, "copy", r.status, r.time_sec, r.nodes, r.pdi, r.objective)
              for r in recs if r.variant == "base"]
    rep = compare_report([r for r in recs if r.variant == "base"] + mirror, "base", "copy", 10.0)
    assert rep.row("Affected").count == 0
    for row in rep.rows:
        if row.count:
            assert row.time_ratio == 1.0 and row.node_ratio == 1.0
            assert row.solved_base == row.solved_test


def test_match_pairs_reports_holes():
    recs = fixture_records()[:3]
    with pytest.raises(ValueError, match="b/seed 1 missing test"):
        match_pairs(recs, "base", "test")


def test_render_text_and_csv():
    rep = compare_report(fixture_records(), "base", "test", 10.0)
    text = rep.to_text()
    header = text.splitlines()[0]
    assert header.index("Solved") < header.index("Time(1)") < header.index("Node(100)")
    assert "PDI" not in header
    assert [line.split()[0] for line in text.splitlines()[3:]] == ["All", "Affected", ">=0s", ">=1s", ">=10s", ">=100s", ">=1000s"]
    assert "5.63" in text
    csv_lines = rep.to_csv().splitlines()
    assert csv_lines[0].startswith("bracket,count,solved_base,solved_test")
    assert csv_lines[1].startswith("All,2,1,2,5.63,")
    assert '"baseline": "base"' in rep.to_json()


def random_records(rng, n_pairs, limit=100.0):
    recs = []
    for k in range(n_pairs):
        for v in ("b", "t"):
            solved = rng.random() < 0.8
            t = float(rng.exponential(20)) if solved else limit
            recs.append(RunRecord(f"i{k}", 1, v, "optimal" if solved else "time-limit", min(t, limit),
                                  int(rng.integers(1, 5000)), float(rng.uniform(0, 50)), None))
    return recs


def test_bracket_nesting_randomized():
    rng = np.random.default_rng(0)
    for _ in range(200):
        rep = compare_report(random_records(rng, int(rng.integers(1, 15))), "b", "t", 100.0)
        counts = [rep.row(f">={x}s").count for x in (0, 1, 10, 100, 1000)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert counts[0] <= rep.row("All").count
        assert rep.row("Affected").count <= rep.row("All").count


def test_record_json_round_trip(tmp_path):
    recs = fixture_records() + [rec("c", "base", "infeasible", obj=None)]
    path = tmp_path / "r.jsonl"
    write_jsonl(recs, path)
    assert read_jsonl(path) == recs
    first = path.read_text().splitlines()[0]
    assert list(__import__("json").loads(first)) == ["instance", "seed", "variant", "status", "time_sec",
                                                     "nodes", "pdi", "objective"]


def test_generators_deterministic():
    a = write_mps(instances.generate_instance("knapsack", seed=1, n=10))
    b = write_mps(instances.generate_instance("knapsack", seed=1, n=10))
    assert a == b
    assert a != write_mps(instances.generate_instance("knapsack", seed=2, n=10))


def test_setcover_all_ones_feasible():
    p = instances.generate_instance("setcover", seed=7, n_elements=20, n_sets=40)
    act = p.dense_matrix() @ np.ones(p.n_vars)
    lo, _ = p.row_bounds()
    assert np.all(act >= lo)


@pytest.mark.parametrize("family, size", [("knapsack", dict(n=12, dims=2)),
                                          ("setcover", dict(n_elements=10, n_sets=13, density=0.25)),
                                          ("gap", dict(agents=3, jobs=5))])
def test_generated_optimum_matches_enumeration(family, size):
    for seed in range(3):
        p = instances.generate_instance(family, seed=seed, **size)
        assert p.n_vars <= 15
        ref, _ = enumerate_binary_optimum(p)
        assert ref is not None
        assert solve(p).objective == ref


def test_unknown_family():
    with pytest.raises(ValueError):
        instances.generate_instance("tsp")


def test_run_experiment_order_and_pool():
    probs = desk_suite(2)
    cfg = SolveConfig(time_limit=30)
    serial = run_experiment(probs, [1, 2], ["pscost", "dpscost"], cfg)
    assert [(r.instance, r.seed, r.variant) for r in serial] == [
        (p.name, s, v) for p in probs for s in (1, 2) for v in ("pscost", "dpscost")]
    pooled = run_experiment(probs, [1, 2], ["pscost", "dpscost"], cfg, jobs=2)
    strip = lambda rs: [(r.instance, r.seed, r.variant, r.status, r.nodes, r.objective) for r in rs]
    assert strip(serial) == strip(pooled)


def test_load_instances(tmp_path):
    for seed in (2, 1):
        p = instances.generate_instance("knapsack", seed=seed, n=6)
        (tmp_path / f"{p.name}.mps").write_text(write_mps(p))
    names = [p.name for p in load_instances([tmp_path])]
    assert names == sorted(names) and len(names) == 2
