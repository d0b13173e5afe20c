"""Benchmarks, attack campaigns and reference figures."""

from .attacks import AttackKind, AttackReport, attack_campaign, linkage_from_events, linkage_scenario, spam_flood
from .bench import BenchReport, bench_pipeline, bench_tps, synthetic_create_tx
from .reference import LABEL, reference_lines

__all__ = [
    "AttackKind",
    "AttackReport",
    "BenchReport",
    "LABEL",
    "attack_campaign",
    "bench_pipeline",
    "bench_tps",
    "linkage_from_events",
    "linkage_scenario",
    "reference_lines",
    "spam_flood",
    "synthetic_create_tx",
]
