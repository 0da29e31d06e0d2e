from .instances import FAMILIES, generate_instance
from .runner import desk_suite, load_instances, read_jsonl, run_experiment, run_one, write_jsonl
from .stats import (BracketReport, BracketRow, RunRecord, affected_filter, bracket_filter, compare_report,
                    match_pairs, shifted_geomean)

__all__ = [
    "FAMILIES", "generate_instance", "desk_suite", "load_instances", "read_jsonl", "run_experiment",
    "run_one", "write_jsonl", "BracketReport", "BracketRow", "RunRecord", "affected_filter",
    "bracket_filter", "compare_report", "match_pairs", "shifted_geomean",
]
