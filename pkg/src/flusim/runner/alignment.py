"""
Alignment of agent-based runs with the SIR baseline.

Runs a control-free scenario for every seed, integrates the matching ODE
(R0 and infectious duration from the scenario's ``alignment`` block,
i0 = initial_infected / population) and compares each run with it.

Artifacts under ``<output>/<name>/alignment/``: ``abm_seed<k>.csv``,
``sir.csv`` and ``report.json``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from flusim.core.exceptions import ConfigValidationError, OutputError
from flusim.core.logging import get_logger, log_operation
from flusim.core.sir import (
    AlignmentReport,
    SirParams,
    SirTrajectory,
    align_abm,
    analytic_peak,
    integrate,
    peak_infected,
)
from flusim.runner.batch import build_population, simulate
from flusim.runner.scenario import ScenarioConfig

logger = get_logger(__name__)


@dataclass
class AlignmentSummary:
    """Per-seed alignment reports and batch-level fractions."""

    scenario: str
    sir_params: SirParams
    trajectory: SirTrajectory
    reports: dict[int, AlignmentReport]
    peak_window: int
    output_dir: Path | None = None
    files: list[Path] = field(default_factory=list)

    @property
    def unimodal_fraction(self) -> float:
        return sum(r.unimodal for r in self.reports.values()) / len(self.reports)

    @property
    def within_window_fraction(self) -> float:
        inside = sum(abs(r.peak_day_delta) <= self.peak_window for r in self.reports.values())
        return inside / len(self.reports)

    def to_dict(self) -> dict[str, Any]:
        t_peak, i_peak = peak_infected(self.trajectory)
        return {
            "scenario": self.scenario,
            "ode": {
                "r0": self.sir_params.r0,
                "beta": self.sir_params.beta,
                "gamma": self.sir_params.gamma,
                "i0": self.sir_params.i0,
                "peak_t": t_peak,
                "peak_fraction": i_peak,
                "analytic_peak_fraction": analytic_peak(
                    self.sir_params.r0, self.sir_params.s0, self.sir_params.i0
                ),
            },
            "peak_window": self.peak_window,
            "unimodal_fraction": self.unimodal_fraction,
            "within_peak_window_fraction": self.within_window_fraction,
            "seeds": [{"seed": seed, **r.to_dict()} for seed, r in self.reports.items()],
        }


def sir_params_for(config: ScenarioConfig) -> SirParams:
    """ODE parameters matching the scenario's setup."""
    return SirParams.from_r0(
        config.alignment.r0,
        config.alignment.duration,
        i0=config.initial_infected / config.population,
    )


def validate_alignment(
    config: ScenarioConfig,
    output_dir: Path | None = None,
    tolerance: float = 0.02,
    window: int = 5,
    peak_window: int = 5,
    write: bool = True,
) -> AlignmentSummary:
    """Compare every seed of a control-free scenario with the SIR baseline.

    Args:
        config: Scenario without strategies.
        output_dir: Root overriding the config's output_dir.
        tolerance: Fluctuation (fraction of N) ignored by the unimodality test.
        window: Rolling-mean width applied before the unimodality test.
        peak_window: Peak-day distance counted as aligned.
        write: Write the CSV and JSON artifacts.

    Raises:
        ConfigValidationError: If the scenario carries control strategies.
        OutputError: If the artifacts cannot be written.
    """
    if config.strategies:
        raise ConfigValidationError(
            "alignment runs compare uncontrolled epidemics; remove the strategies",
            path="strategies",
        )
    params = sir_params_for(config)
    trajectory = integrate(params, t_end=float(config.days), dt=config.alignment.dt)

    reports: dict[int, AlignmentReport] = {}
    with log_operation(logger, "validate_alignment", scenario=config.name):
        agents = build_population(config)
        for seed in config.run_seeds:
            _, records = simulate(config, agents, seed)
            reports[seed] = align_abm(records, trajectory, config.population, tolerance, window)
            logger.debug(
                f"seed {seed}: peak delta {reports[seed].peak_day_delta}d, "
                f"rmse {reports[seed].rmse:.4f}, unimodal {reports[seed].unimodal}"
            )

    summary = AlignmentSummary(
        scenario=config.name,
        sir_params=params,
        trajectory=trajectory,
        reports=reports,
        peak_window=peak_window,
    )
    if write:
        summary.output_dir = config.resolve_output_dir(output_dir) / "alignment"
        summary.files = write_alignment(summary, summary.output_dir)
    return summary


def write_alignment(summary: AlignmentSummary, directory: Path) -> list[Path]:
    try:
        directory.mkdir(parents=True, exist_ok=True)
        files = []
        for seed, report in summary.reports.items():
            path = directory / f"abm_seed{seed}.csv"
            report.curves_frame().to_csv(path, index=False, encoding="utf-8")
            files.append(path)
        files.append(summary.trajectory.to_csv(directory / "sir.csv"))
        report_path = directory / "report.json"
        report_path.write_text(json.dumps(summary.to_dict(), indent=2) + "\n", encoding="utf-8")
        files.append(report_path)
    except OSError as e:
        raise OutputError(f"cannot write alignment results to {directory}: {e}") from e
    return files
