"""
Seeded Monte Carlo batches.

``run_scenario`` synthesizes (or loads) the scenario population once, runs
every seed on its own World, then writes per-seed and aggregate artifacts:

    <output>/<name>/census_seed<k>.csv
    <output>/<name>/edges_seed<k>.csv
    <output>/<name>/social_types_seed<k>.csv
    <output>/<name>/aggregate.csv
    <output>/<name>/social_types.csv
    <output>/<name>/summary.json
    <output>/<name>/scenario.json
"""

import asyncio
import json
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from flusim.core.cache import PopulationCache
from flusim.core.disease import STATE_ORDER, HealthState
from flusim.core.engine import (
    CENSUS_COLUMNS,
    DailyCensus,
    World,
    completed_agents,
    create_world,
    estimate_R,
    run,
    social_type_breakdown,
)
from flusim.core.exceptions import OutputError
from flusim.core.logging import get_logger, log_operation
from flusim.core.population import Agent, synthesize_population
from flusim.runner.scenario import ScenarioConfig, serialize_config

logger = get_logger(__name__)

METRICS: tuple[str, ...] = ("peak_infected", "peak_day", "attack_rate", "total_dead", "estimated_R")
EDGE_COLUMNS: tuple[str, ...] = ("infector", "infectee", "day")


@dataclass(frozen=True)
class SeedSummary:
    """Headline numbers of one seeded run."""

    seed: int
    peak_infected: int
    peak_day: int
    attack_rate: float
    total_dead: int
    estimated_R: float | None
    final_counts: dict[str, int]
    social_types: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "peak_infected": self.peak_infected,
            "peak_day": self.peak_day,
            "attack_rate": self.attack_rate,
            "total_dead": self.total_dead,
            "estimated_R": self.estimated_R,
            "final_counts": dict(self.final_counts),
            "social_types": {k: dict(v) for k, v in self.social_types.items()},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SeedSummary":
        return cls(
            seed=int(data["seed"]),
            peak_infected=int(data["peak_infected"]),
            peak_day=int(data["peak_day"]),
            attack_rate=float(data["attack_rate"]),
            total_dead=int(data["total_dead"]),
            estimated_R=None if data.get("estimated_R") is None else float(data["estimated_R"]),
            final_counts={k: int(v) for k, v in data["final_counts"].items()},
            social_types={
                k: {s: int(c) for s, c in v.items()}
                for k, v in data.get("social_types", {}).items()
            },
        )


@dataclass(frozen=True)
class SummaryReport:
    """Per-seed summaries of a scenario plus their median and mean."""

    scenario: str
    population: int
    days: int
    seeds: list[SeedSummary]

    @property
    def seed_ids(self) -> list[int]:
        return [s.seed for s in self.seeds]

    def metric(self, name: str) -> np.ndarray:
        """One metric over seeds; an undefined R is NaN."""
        values = [getattr(s, name) for s in self.seeds]
        return np.array([np.nan if v is None else v for v in values], dtype=float)

    def aggregate(self) -> dict[str, dict[str, float | None]]:
        """Median and mean of every metric (NaN-free values only)."""
        result: dict[str, dict[str, float | None]] = {}
        for name in METRICS:
            values = self.metric(name)
            values = values[~np.isnan(values)]
            result[name] = {
                "median": float(np.median(values)) if values.size else None,
                "mean": float(np.mean(values)) if values.size else None,
            }
        return result

    def mean_final_counts(self) -> dict[str, float]:
        return {
            state.value: float(np.mean([s.final_counts[state.value] for s in self.seeds]))
            for state in STATE_ORDER
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "population": self.population,
            "days": self.days,
            "seeds": [s.to_dict() for s in self.seeds],
            "aggregate": {**self.aggregate(), "final_counts_mean": self.mean_final_counts()},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SummaryReport":
        return cls(
            scenario=str(data["scenario"]),
            population=int(data["population"]),
            days=int(data["days"]),
            seeds=[SeedSummary.from_dict(s) for s in data["seeds"]],
        )

    def write(self, path: Path) -> Path:
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Path) -> "SummaryReport":
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))


@dataclass
class SeedOutcome:
    """Everything one seed produced, ready to be written."""

    summary: SeedSummary
    census: pd.DataFrame
    edges: pd.DataFrame
    social_types: pd.DataFrame


@dataclass
class ScenarioResult:
    """Outcome of run_scenario: the summary and where artifacts went."""

    summary: SummaryReport
    output_dir: Path
    files: list[Path] = field(default_factory=list)


def census_frame(records: Sequence[DailyCensus]) -> pd.DataFrame:
    return pd.DataFrame([r.as_row() for r in records], columns=list(CENSUS_COLUMNS))


def summarize_seed(
    seed: int,
    records: Sequence[DailyCensus],
    estimated_r: float | None,
    social: pd.DataFrame,
) -> SeedSummary:
    """Headline numbers of one run; peak is the first maximum of C+E+I+Q+NQ."""
    infected = [r.infected for r in records]
    peak_index = int(np.argmax(infected))
    last = records[-1]
    return SeedSummary(
        seed=seed,
        peak_infected=int(infected[peak_index]),
        peak_day=records[peak_index].day,
        attack_rate=last.cumulative_infected / last.population,
        total_dead=last.counts[HealthState.DEAD],
        estimated_R=estimated_r,
        final_counts={state.value: last.counts[state] for state in STATE_ORDER},
        social_types={
            str(row): {str(col): int(social.at[row, col]) for col in social.columns}
            for row in social.index
        },
    )


def simulate(
    config: ScenarioConfig, agents: Sequence[Agent], seed: int
) -> tuple[World, list[DailyCensus]]:
    """Run one seed of ``config`` on a private copy of ``agents``."""
    world = create_world(
        agents,
        config.disease,
        seed=seed,
        initial_infected=config.initial_infected,
        landscape_side=config.landscape_side,
        mode=config.mode,
        engine=config.engine,
        population_params=config.population_params,
    )
    return world, run(world, config.days, config.strategies)


def run_seed(config: ScenarioConfig, agents: Sequence[Agent], seed: int) -> SeedOutcome:
    """Simulate one seed and collect its artifacts."""
    world, records = simulate(config, agents, seed)
    social = social_type_breakdown(world)
    estimated_r = estimate_R(world.infection_edges, completed_agents(world))
    return SeedOutcome(
        summary=summarize_seed(seed, records, estimated_r, social),
        census=census_frame(records),
        edges=pd.DataFrame(world.infection_edges, columns=list(EDGE_COLUMNS)),
        social_types=social,
    )


def build_population(config: ScenarioConfig, cache: PopulationCache | None = None) -> list[Agent]:
    """Synthesize the scenario population, going through ``cache`` when given."""
    if cache is not None:
        cached = cache.get(
            config.population,
            config.landscape_side,
            config.population_seed,
            config.population_params,
        )
        if cached is not None:
            return cached
    agents = synthesize_population(
        config.population, config.landscape_side, config.population_seed, config.population_params
    )
    if cache is not None:
        cache.set(agents, config.landscape_side, config.population_seed, config.population_params)
    return agents


async def _run_parallel(
    config: ScenarioConfig,
    agents: Sequence[Agent],
    workers: int,
    on_seed_done: Callable[[SeedSummary], None] | None,
) -> list[SeedOutcome]:
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            loop.run_in_executor(pool, run_seed, config, agents, seed) for seed in config.run_seeds
        ]
        outcomes: list[SeedOutcome] = []
        for future in asyncio.as_completed(futures):
            outcome = await future
            outcomes.append(outcome)
            if on_seed_done:
                on_seed_done(outcome.summary)
    return outcomes


def run_seeds(
    config: ScenarioConfig,
    agents: Sequence[Agent],
    workers: int = 1,
    on_seed_done: Callable[[SeedSummary], None] | None = None,
) -> list[SeedOutcome]:
    """Run every seed; results come back in ``config.run_seeds`` order."""
    if workers > 1 and len(config.run_seeds) > 1:
        outcomes = asyncio.run(_run_parallel(config, agents, workers, on_seed_done))
    else:
        outcomes = []
        for seed in config.run_seeds:
            with log_operation(logger, "run_seed", scenario=config.name, seed=seed) as result:
                outcome = run_seed(config, agents, seed)
                result["peak_infected"] = outcome.summary.peak_infected
                result["attack_rate"] = round(outcome.summary.attack_rate, 4)
            outcomes.append(outcome)
            if on_seed_done:
                on_seed_done(outcome.summary)
    position = {seed: i for i, seed in enumerate(config.run_seeds)}
    return sorted(outcomes, key=lambda o: position[o.summary.seed])


def summary_report(config: ScenarioConfig, outcomes: Sequence[SeedOutcome]) -> SummaryReport:
    return SummaryReport(
        scenario=config.name,
        population=config.population,
        days=config.days,
        seeds=[o.summary for o in outcomes],
    )


def aggregate_curves(frames: Sequence[pd.DataFrame], quantiles: Sequence[float]) -> pd.DataFrame:
    """Per day and census column: mean, median and the requested quantiles over seeds."""
    stacked = pd.concat(frames, keys=range(len(frames)), names=["run", "row"])
    grouped = stacked.groupby("day")
    columns = [c for c in CENSUS_COLUMNS if c != "day"]
    parts: dict[str, pd.Series] = {}
    for column in columns:
        parts[f"{column}_mean"] = grouped[column].mean()
        parts[f"{column}_median"] = grouped[column].median()
        for q in quantiles:
            parts[f"{column}_q{round(q * 100):02d}"] = grouped[column].quantile(q)
    return pd.DataFrame(parts).reset_index()


def _prepare_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {path}: {e}") from e
    return path


def write_outcomes(
    config: ScenarioConfig,
    outcomes: Sequence[SeedOutcome],
    directory: Path,
    quantiles: Sequence[float] = (0.1, 0.5, 0.9),
) -> list[Path]:
    """Write all artifacts of a finished batch; returns the written paths."""
    _prepare_dir(directory)
    written: list[Path] = []
    try:
        for outcome in outcomes:
            seed = outcome.summary.seed
            paths = (
                directory / f"census_seed{seed}.csv",
                directory / f"edges_seed{seed}.csv",
                directory / f"social_types_seed{seed}.csv",
            )
            outcome.census.to_csv(paths[0], index=False, encoding="utf-8")
            outcome.edges.to_csv(paths[1], index=False, encoding="utf-8")
            outcome.social_types.to_csv(paths[2], encoding="utf-8")
            written.extend(paths)

        aggregate = directory / "aggregate.csv"
        aggregate_curves([o.census for o in outcomes], quantiles).to_csv(
            aggregate, index=False, encoding="utf-8"
        )
        social = directory / "social_types.csv"
        social_mean = sum(o.social_types for o in outcomes) / len(outcomes)
        social_mean.to_csv(social, encoding="utf-8")

        summary = summary_report(config, outcomes).write(directory / "summary.json")
        scenario = directory / "scenario.json"
        scenario.write_text(serialize_config(config) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write results to {directory}: {e}") from e
    return [*written, aggregate, social, summary, scenario]


def run_scenario(
    config: ScenarioConfig,
    workers: int = 1,
    cache: PopulationCache | None = None,
    output_dir: Path | None = None,
    quantiles: Sequence[float] = (0.1, 0.5, 0.9),
    on_seed_done: Callable[[SeedSummary], None] | None = None,
) -> ScenarioResult:
    """Run every seed of ``config`` and write its artifacts.

    Args:
        config: Validated scenario.
        workers: Process count for seeds; 1 runs in-process.
        cache: Optional population cache.
        output_dir: Root overriding the config's output_dir.
        quantiles: Quantiles for the aggregate curves.
        on_seed_done: Called with each seed summary as it finishes.

    Raises:
        OutputError: If the output directory cannot be written.
    """
    directory = config.resolve_output_dir(output_dir)
    _prepare_dir(directory)
    with log_operation(logger, "run_scenario", scenario=config.name, seeds=len(config.run_seeds)):
        agents = build_population(config, cache)
        outcomes = run_seeds(config, agents, workers, on_seed_done)
        files = write_outcomes(config, outcomes, directory, quantiles)
    return ScenarioResult(
        summary=summary_report(config, outcomes), output_dir=directory, files=files
    )
