"""Benchmark statistics: shifted geometric means and bracketed comparisons."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

TIME_SHIFT = 1.0
NODE_SHIFT = 100.0
PDI_SHIFT = 100.0
BRACKET_SECONDS = (0, 1, 10, 100, 1000)
SOLVED = ("optimal", "infeasible", "unbounded")


@dataclass(frozen=True)
class RunRecord:
    instance: str
    seed: int
    variant: str
    status: str
    time_sec: float
    nodes: int
    pdi: float
    objective: float | None = None

    @property
    def solved(self) -> bool:
        return self.status in SOLVED

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False, separators=(", ", ": "))

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        d = json.loads(line)
        return cls(d["instance"], int(d["seed"]), d["variant"], d["status"], float(d["time_sec"]),
                   int(d["nodes"]), float(d["pdi"]), None if d.get("objective") is None else float(d["objective"]))


def shifted_geomean(values: Sequence[float], shift: float) -> float:
    """``exp(mean(log(v + shift))) - shift``."""
    values = list(values)
    if not values:
        raise ValueError("shifted_geomean of an empty sequence")
    if not shift > 0:
        raise ValueError("shift must be positive")
    if min(values) == max(values):
        # exact for constant sequences, where exp(log(.)) would leave rounding residue
        return float(values[0])
    logs = [math.log(v + shift) for v in values]
    return math.exp(math.fsum(logs) / len(logs)) - shift


Pair = tuple[RunRecord, RunRecord]


def match_pairs(records: Iterable[RunRecord], baseline: str, test: str) -> list[Pair]:
    """Pair baseline and test runs by ``(instance, seed)``; every key needs both."""
    base, other = {}, {}
    for r in records:
        key = (r.instance, r.seed)
        if r.variant == baseline:
            if key in base:
                raise ValueError(f"duplicate {baseline} record for {key}")
            base[key] = r
        elif r.variant == test:
            if key in other:
                raise ValueError(f"duplicate {test} record for {key}")
            other[key] = r
    holes = sorted([(k, test) for k in base.keys() - other.keys()]
                   + [(k, baseline) for k in other.keys() - base.keys()])
    if holes:
        desc = ", ".join(f"{inst}/seed {seed} missing {v}" for (inst, seed), v in holes)
        raise ValueError(f"unmatched records: {desc}")
    if not base:
        raise ValueError(f"no records for variants {baseline!r} and {test!r}")
    return [(base[k], other[k]) for k in sorted(base)]


def effective_time(r: RunRecord, time_limit: float | None) -> float:
    if not r.solved and time_limit is not None:
        return max(time_limit, r.time_sec)
    return r.time_sec


def bracket_filter(pairs: Sequence[Pair], seconds: float, time_limit: float | None = None) -> list[Pair]:
    """Pairs where at least one variant took more than ``seconds``."""
    out = []
    for a, b in pairs:
        if (a.instance, a.seed) != (b.instance, b.seed):
            raise ValueError(f"unmatched pair {a.instance}/{a.seed} vs {b.instance}/{b.seed}")
        if max(effective_time(a, time_limit), effective_time(b, time_limit)) > seconds:
            out.append((a, b))
    return out


def affected_filter(pairs: Sequence[Pair]) -> list[Pair]:
    """Pairs whose two runs differ in node count or final status."""
    return [(a, b) for a, b in pairs if a.nodes != b.nodes or a.status != b.status]


@dataclass
class BracketRow:
    label: str
    count: int
    solved_base: int
    solved_test: int
    time_base: float | None
    time_ratio: float | None
    node_base: float | None
    node_ratio: float | None
    pdi_base: float | None = None
    pdi_ratio: float | None = None


@dataclass
class BracketReport:
    baseline: str
    test: str
    rows: list[BracketRow]
    with_pdi: bool = False

    def row(self, label: str) -> BracketRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_text(self) -> str:
        return render_text(self)

    def to_csv(self) -> str:
        return render_csv(self)

    def to_json(self) -> str:
        return json.dumps({"baseline": self.baseline, "test": self.test,
                           "rows": [asdict(r) for r in self.rows]}, indent=2)


def _ratio(test: float, base: float) -> float:
    if base == 0.0:
        return 1.0 if test == 0.0 else math.inf
    return test / base


def _row(label: str, pairs: Sequence[Pair], time_limit: float | None, with_pdi: bool) -> BracketRow:
    if not pairs:
        return BracketRow(label, 0, 0, 0, None, None, None, None)
    base = [a for a, _ in pairs]
    test = [b for _, b in pairs]
    tb = shifted_geomean([effective_time(r, time_limit) for r in base], TIME_SHIFT)
    tt = shifted_geomean([effective_time(r, time_limit) for r in test], TIME_SHIFT)
    nb = shifted_geomean([r.nodes for r in base], NODE_SHIFT)
    nt = shifted_geomean([r.nodes for r in test], NODE_SHIFT)
    row = BracketRow(label, len(pairs), sum(r.solved for r in base), sum(r.solved for r in test),
                     tb, _ratio(tt, tb), nb, _ratio(nt, nb))
    if with_pdi:
        pb = shifted_geomean([r.pdi for r in base], PDI_SHIFT)
        pt = shifted_geomean([r.pdi for r in test], PDI_SHIFT)
        row.pdi_base, row.pdi_ratio = pb, _ratio(pt, pb)
    return row


def compare_report(records: Iterable[RunRecord], baseline: str, test: str, time_limit: float | None,
                   with_pdi: bool = False) -> BracketReport:
    """Bracket table comparing ``test`` against ``baseline``.

    The time brackets only contain pairs that at least one variant solved.
    """
    pairs = match_pairs(records, baseline, test)
    rows = [_row("All", pairs, time_limit, with_pdi),
            _row("Affected", affected_filter(pairs), time_limit, with_pdi)]
    some_solved = [(a, b) for a, b in pairs if a.solved or b.solved]
    for x in BRACKET_SECONDS:
        rows.append(_row(f">={x}s", bracket_filter(some_solved, x, time_limit), time_limit, with_pdi))
    return BracketReport(baseline, test, rows, with_pdi)


def _f(x: float | None) -> str:
    return "-" if x is None else f"{x:.2f}"


def render_text(report: BracketReport) -> str:
    b, t = report.baseline, report.test
    groups = ["Solved", "Time(1)", "Node(100)"]
    if report.with_pdi:
        groups.append("PDI(100)")
    w = max(10, len(b), len(t)) + 1
    head1 = f"{'':<10}{'':>7}" + "".join(f"{g:^{2 * w}}" for g in groups)
    head2 = f"{'Bracket':<10}{'Count':>7}" + f"{b:>{w}}{t:>{w}}" * len(groups)
    lines = [head1.rstrip(), head2, "-" * len(head2)]
    for r in report.rows:
        cells = [f"{r.solved_base:>{w}}", f"{r.solved_test:>{w}}",
                 f"{_f(r.time_base):>{w}}", f"{_f(r.time_ratio):>{w}}",
                 f"{_f(r.node_base):>{w}}", f"{_f(r.node_ratio):>{w}}"]
        if report.with_pdi:
            cells += [f"{_f(r.pdi_base):>{w}}", f"{_f(r.pdi_ratio):>{w}}"]
        lines.append(f"{r.label:<10}{r.count:>7}" + "".join(cells))
    return "\n".join(lines) + "\n"


def render_csv(report: BracketReport) -> str:
    b, t = report.baseline, report.test
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["bracket", "count", f"solved_{b}", f"solved_{t}", f"time_{b}", f"time_ratio_{t}",
              f"nodes_{b}", f"nodes_ratio_{t}"]
    if report.with_pdi:
        header += [f"pdi_{b}", f"pdi_ratio_{t}"]
    w.writerow(header)
    for r in report.rows:
        row = [r.label, r.count, r.solved_base, r.solved_test, _f(r.time_base), _f(r.time_ratio),
               _f(r.node_base), _f(r.node_ratio)]
        if report.with_pdi:
            row += [_f(r.pdi_base), _f(r.pdi_ratio)]
        w.writerow(row)
    return buf.getvalue()
