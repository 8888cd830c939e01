"""Paired-seed comparison of two scenario summaries."""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.stats import binomtest

from flusim.core.exceptions import SeedMismatchError
from flusim.runner.batch import SeedSummary, SummaryReport

COMPARED_METRICS: tuple[str, ...] = ("peak_infected", "peak_day", "attack_rate", "total_dead")


@dataclass(frozen=True)
class MetricComparison:
    """Variant minus baseline for one metric, over paired seeds."""

    metric: str
    deltas: list[float]
    median_delta: float
    mean_delta: float
    fraction_lower: float
    sign_test_p: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.metric,
            "deltas": self.deltas,
            "median_delta": self.median_delta,
            "mean_delta": self.mean_delta,
            "fraction_lower": self.fraction_lower,
            "sign_test_p": self.sign_test_p,
        }


@dataclass(frozen=True)
class ComparisonReport:
    baseline: str
    variant: str
    seeds: list[int]
    metrics: dict[str, MetricComparison]

    def to_dict(self) -> dict[str, Any]:
        return {
            "baseline": self.baseline,
            "variant": self.variant,
            "seeds": self.seeds,
            "metrics": {name: m.to_dict() for name, m in self.metrics.items()},
        }


def sign_test(deltas: np.ndarray) -> float:
    """Two-sided sign test p-value; zero deltas are dropped (1.0 if none remain)."""
    nonzero = deltas[deltas != 0]
    if nonzero.size == 0:
        return 1.0
    return float(binomtest(int((nonzero > 0).sum()), int(nonzero.size), 0.5).pvalue)


def _check_pairable(
    baseline: SummaryReport, variant: SummaryReport, seeds: Sequence[int] | None
) -> None:
    if baseline.population != variant.population:
        raise SeedMismatchError(
            f"population differs: {baseline.population} vs {variant.population}"
        )
    if baseline.days != variant.days:
        raise SeedMismatchError(f"days differ: {baseline.days} vs {variant.days}")
    if seeds is not None:
        shared = set(baseline.seed_ids) & set(variant.seed_ids)
        absent = sorted(set(seeds) - shared)
        if absent:
            raise SeedMismatchError(f"requested seeds missing from a summary: {absent}")
    elif sorted(baseline.seed_ids) != sorted(variant.seed_ids):
        missing = sorted(set(baseline.seed_ids) ^ set(variant.seed_ids))
        raise SeedMismatchError(f"seed sets differ; unpaired seeds: {missing}")


def compare_scenarios(
    baseline: SummaryReport, variant: SummaryReport, seeds: Sequence[int] | None = None
) -> ComparisonReport:
    """Per-seed deltas (variant - baseline) with summary statistics.

    ``seeds`` restricts the comparison to a subset present in both summaries;
    by default both must hold the same seed set.

    Raises:
        SeedMismatchError: If population or days differ, or seeds cannot be paired.
    """
    _check_pairable(baseline, variant, seeds)
    paired = sorted(set(seeds)) if seeds is not None else sorted(baseline.seed_ids)
    base_by_seed: dict[int, SeedSummary] = {s.seed: s for s in baseline.seeds}
    var_by_seed: dict[int, SeedSummary] = {s.seed: s for s in variant.seeds}

    metrics: dict[str, MetricComparison] = {}
    for name in COMPARED_METRICS:
        deltas = np.array(
            [
                float(getattr(var_by_seed[s], name)) - float(getattr(base_by_seed[s], name))
                for s in paired
            ]
        )
        metrics[name] = MetricComparison(
            metric=name,
            deltas=deltas.tolist(),
            median_delta=float(np.median(deltas)),
            mean_delta=float(np.mean(deltas)),
            fraction_lower=float(np.mean(deltas < 0)),
            sign_test_p=sign_test(deltas),
        )
    return ComparisonReport(
        baseline=baseline.scenario, variant=variant.scenario, seeds=paired, metrics=metrics
    )
