"""Batch scenario runner: configs, seeded batches, comparisons, alignment."""

from flusim.runner.alignment import AlignmentSummary, validate_alignment
from flusim.runner.batch import ScenarioResult, SeedSummary, SummaryReport, run_scenario
from flusim.runner.compare import ComparisonReport, compare_scenarios
from flusim.runner.scenario import (
    ScenarioConfig,
    bundled_scenarios,
    load_config,
    parse_config,
    serialize_config,
)

__all__ = [
    "AlignmentSummary",
    "ComparisonReport",
    "ScenarioConfig",
    "ScenarioResult",
    "SeedSummary",
    "SummaryReport",
    "bundled_scenarios",
    "compare_scenarios",
    "load_config",
    "parse_config",
    "run_scenario",
    "serialize_config",
    "validate_alignment",
]
