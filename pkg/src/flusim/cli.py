"""
CLI interface using Typer.

Provides commands for running scenario batches, comparing their summaries,
checking alignment with the SIR baseline and integrating the baseline alone.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

import json
import logging
from collections.abc import Generator
from contextlib import contextmanager
from pathlib import Path

import typer
from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from flusim import __version__
from flusim.config import Settings, settings
from flusim.core.exceptions import ConfigValidationError, FluSimError, ParameterError
from flusim.core.logging import configure_logging, get_logger

app = typer.Typer(
    name="flusim",
    help="Agent-based pandemic influenza simulator with control strategies and SIR baseline.",
    add_completion=True,
)
console = Console()
err_console = Console(stderr=True)

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def version_callback(value: bool) -> None:
    """Show version and exit."""
    if value:
        console.print(f"[bold blue]flusim[/bold blue] version [green]{__version__}[/green]")
        raise typer.Exit()


@app.callback()
def main(
    version: bool = typer.Option(
        False,
        "--version",
        "-V",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit.",
    ),
) -> None:
    """
    flusim - Agent-Based Pandemic Influenza Simulator.

    Run seeded batches of epidemic scenarios over a synthetic population,
    inject control strategies, and validate against the classical SIR model.
    """


def _setup_logging(verbose: bool, quiet: bool) -> None:
    if verbose and quiet:
        err_console.print("[red]Error: --verbose and --quiet cannot be used together.[/red]")
        raise typer.Exit(EXIT_VALIDATION)
    configure_logging(
        level=logging.DEBUG if verbose else logging.INFO,
        use_json=settings.log_json,
        quiet=quiet,
    )


@contextmanager
def exit_codes() -> Generator[None, None, None]:
    """Map library errors to the CLI exit codes."""
    try:
        yield
    except (ConfigValidationError, ParameterError) as e:
        err_console.print(f"[red]Invalid input:[/red] {e}")
        raise typer.Exit(EXIT_VALIDATION) from e
    except (FluSimError, OSError) as e:
        err_console.print(f"[red]Failed:[/red] {e}")
        raise typer.Exit(EXIT_RUNTIME) from e


def parse_seeds(text: str | None) -> list[int] | None:
    """``"1,2,3"`` -> [1, 2, 3]; None passes through."""
    if text is None:
        return None
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigValidationError(
            f"expected comma-separated integers, got {text!r}", path="--seeds"
        ) from e
    if not seeds:
        raise ConfigValidationError("at least one seed required", path="--seeds")
    return seeds


def _metric_table(title: str, aggregate: dict[str, dict[str, float | None]]) -> Table:
    table = Table(title=title)
    table.add_column("Metric", style="cyan")
    table.add_column("Median", style="green", justify="right")
    table.add_column("Mean", style="green", justify="right")
    for name, values in aggregate.items():
        cells = ["-" if v is None else f"{v:.4g}" for v in (values["median"], values["mean"])]
        table.add_row(name, *cells)
    return table


# Shared options
OutputDirOption = typer.Option(
    None, "--output-dir", "-o", help="Results root (defaults to the config or settings)."
)
SeedsOption = typer.Option(None, "--seeds", "-s", help="Comma-separated run seeds override.")
QuietOption = typer.Option(False, "--quiet", "-q", help="Only show warnings and errors.")
VerboseOption = typer.Option(False, "--verbose", help="Enable debug logging output.")


@app.command()
def run(
    config: str = typer.Argument(..., help="Scenario JSON file or bundled scenario name."),
    output_dir: Path | None = OutputDirOption,
    seeds: str | None = SeedsOption,
    workers: int = typer.Option(
        settings.max_workers, "--workers", "-w", min=1, help="Worker processes for seeds."
    ),
    use_cache: bool = typer.Option(
        False, "--cache", help="Reuse cached synthesized populations."
    ),
    quiet: bool = QuietOption,
    verbose: bool = VerboseOption,
) -> None:
    """Run every seed of a scenario and write its artifacts."""
    _setup_logging(verbose, quiet)
    logger = get_logger(__name__)

    from flusim.core.cache import PopulationCache
    from flusim.runner.batch import SeedSummary, run_scenario
    from flusim.runner.scenario import load_config

    with exit_codes():
        scenario = load_config(config)
        override = parse_seeds(seeds)
        if override is not None:
            scenario = scenario.with_seeds(override)
        cache = PopulationCache(settings.cache_dir) if use_cache else None
        logger.debug(f"Loaded scenario {scenario.name} with {len(scenario.run_seeds)} seed(s)")

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            console=console,
            disable=quiet,
        ) as progress:
            task = progress.add_task(f"Running {scenario.name}...", total=len(scenario.run_seeds))

            def on_seed_done(summary: SeedSummary) -> None:
                progress.advance(task)
                if not quiet:
                    console.print(
                        f"  [green]✓[/green] seed {summary.seed}: peak {summary.peak_infected} "
                        f"on day {summary.peak_day}, attack rate {summary.attack_rate:.1%}"
                    )

            result = run_scenario(
                scenario,
                workers=workers,
                cache=cache,
                output_dir=output_dir or (None if scenario.output_dir else settings.output_dir),
                quantiles=settings.quantiles,
                on_seed_done=on_seed_done,
            )

    if not quiet:
        console.print()
        console.print(_metric_table(f"Scenario {scenario.name}", result.summary.aggregate()))
        console.print(f"[bold]Results:[/bold] {result.output_dir}")


@app.command()
def compare(
    baseline: Path = typer.Argument(..., help="Baseline summary.json.", exists=True),
    variant: Path = typer.Argument(..., help="Variant summary.json.", exists=True),
    output: Path | None = typer.Option(
        None, "--output", "-o", help="Write the comparison as JSON to this file."
    ),
    seeds: str | None = typer.Option(
        None, "--seeds", "-s", help="Comma-separated subset of seeds to pair."
    ),
    quiet: bool = QuietOption,
    verbose: bool = VerboseOption,
) -> None:
    """Paired-seed comparison of two scenario summaries (variant - baseline)."""
    _setup_logging(verbose, quiet)

    from flusim.runner.batch import SummaryReport
    from flusim.runner.compare import compare_scenarios

    with exit_codes():
        reports = []
        for path in (baseline, variant):
            try:
                reports.append(SummaryReport.load(path))
            except (KeyError, TypeError, ValueError) as e:
                raise ConfigValidationError(f"not a summary file: {e}", path=str(path)) from e
        comparison = compare_scenarios(*reports, seeds=parse_seeds(seeds))
        if output:
            output.parent.mkdir(parents=True, exist_ok=True)
            output.write_text(json.dumps(comparison.to_dict(), indent=2) + "\n", encoding="utf-8")

    table = Table(title=f"{comparison.variant} vs {comparison.baseline}")
    table.add_column("Metric", style="cyan")
    table.add_column("Median Δ", justify="right")
    table.add_column("Mean Δ", justify="right")
    table.add_column("Variant lower", justify="right")
    table.add_column("Sign test p", justify="right")
    for name, metric in comparison.metrics.items():
        table.add_row(
            name,
            f"{metric.median_delta:.4g}",
            f"{metric.mean_delta:.4g}",
            f"{metric.fraction_lower:.0%}",
            f"{metric.sign_test_p:.3g}",
        )
    console.print(table)


@app.command("validate-alignment")
def validate_alignment_command(
    config: str = typer.Argument("alignment", help="Scenario JSON file or bundled name."),
    output_dir: Path | None = OutputDirOption,
    seeds: str | None = SeedsOption,
    quiet: bool = QuietOption,
    verbose: bool = VerboseOption,
) -> None:
    """Compare control-free runs with the matching SIR trajectory."""
    _setup_logging(verbose, quiet)

    from flusim.runner.alignment import validate_alignment
    from flusim.runner.scenario import load_config

    with exit_codes():
        scenario = load_config(config)
        override = parse_seeds(seeds)
        if override is not None:
            scenario = scenario.with_seeds(override)
        summary = validate_alignment(
            scenario,
            output_dir=output_dir or (None if scenario.output_dir else settings.output_dir),
            tolerance=settings.unimodal_tolerance,
            window=settings.unimodal_window,
            peak_window=settings.alignment_peak_window,
        )

    if quiet:
        return
    table = Table(title=f"Alignment: {scenario.name}")
    table.add_column("Seed", style="cyan", justify="right")
    table.add_column("Peak Δ (days)", justify="right")
    table.add_column("Height Δ", justify="right")
    table.add_column("RMSE", justify="right")
    table.add_column("Unimodal")
    for seed, report in summary.reports.items():
        table.add_row(
            str(seed),
            str(report.peak_day_delta),
            f"{report.peak_height_delta:+.3f}",
            f"{report.rmse:.4f}",
            "[green]yes[/green]" if report.unimodal else "[yellow]no[/yellow]",
        )
    console.print(table)
    console.print(
        f"[bold]Unimodal:[/bold] {summary.unimodal_fraction:.0%}  "
        f"[bold]Peak within ±{summary.peak_window}d:[/bold] {summary.within_window_fraction:.0%}"
    )
    if summary.output_dir:
        console.print(f"[bold]Results:[/bold] {summary.output_dir}")


@app.command()
def sir(
    params: Path = typer.Argument(
        ..., help="JSON with r0|beta, gamma|duration, i0, m0, t_end, dt."
    ),
    output_dir: Path | None = OutputDirOption,
    quiet: bool = QuietOption,
    verbose: bool = VerboseOption,
) -> None:
    """Integrate the SIR baseline alone and write sir.csv."""
    _setup_logging(verbose, quiet)

    from flusim.core.sir import analytic_peak, final_size, integrate, peak_infected
    from flusim.runner.scenario import parse_sir_document

    with exit_codes():
        document = parse_sir_document(params.read_text(encoding="utf-8"))
        sir_params = document.params()
        trajectory = integrate(sir_params, document.t_end, document.dt)
        target = (output_dir or settings.output_dir) / "sir" / "sir.csv"
        trajectory.to_csv(target)

    if quiet:
        return
    t_peak, i_peak = peak_infected(trajectory)
    table = Table(title="SIR baseline")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green", justify="right")
    table.add_row("R0", f"{sir_params.r0:.4g}")
    table.add_row("Peak day", f"{t_peak:.2f}")
    table.add_row("Peak infected", f"{i_peak:.4f}")
    table.add_row(
        "Analytic peak", f"{analytic_peak(sir_params.r0, sir_params.s0, sir_params.i0):.4f}"
    )
    table.add_row("Removed at t_end", f"{trajectory.r[-1]:.4f}")
    table.add_row("Final size (oracle)", f"{final_size(sir_params.r0):.4f}")
    console.print(table)
    console.print(f"[bold]Trajectory:[/bold] {target}")


app_config = typer.Typer(help="Manage configuration.", name="config")
app.add_typer(app_config, name="config")


@app_config.command(name="show")
def config_show() -> None:
    """Show current configuration."""
    table = Table(title="Current Configuration")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")
    table.add_column("Environment variable", style="dim")

    for name in Settings.model_fields:
        value = getattr(settings, name)
        shown = ", ".join(str(v) for v in value) if isinstance(value, list) else str(value)
        table.add_row(name, shown, f"FLUSIM_{name.upper()}")

    console.print(table)


@app_config.command(name="set")
def config_set(
    key: str = typer.Option(..., "--key", "-k", help="Setting key to update."),
    value: str = typer.Option(..., "--value", "-v", help="New value for the setting."),
) -> None:
    """Update a configuration setting in the .env file."""
    if key not in Settings.model_fields:
        console.print(f"[red]Invalid key: {key}[/red]")
        console.print(f"Valid keys: {', '.join(Settings.model_fields)}")
        raise typer.Exit(EXIT_VALIDATION)

    env_var = f"FLUSIM_{key.upper()}"
    env_path = Path(".env")

    lines = env_path.read_text(encoding="utf-8").splitlines() if env_path.exists() else []
    found = False
    new_lines = []
    for line in lines:
        if line.strip().startswith(f"{env_var}="):
            new_lines.append(f"{env_var}={value}")
            found = True
        else:
            new_lines.append(line)
    if not found:
        if new_lines and new_lines[-1] != "":
            new_lines.append("")
        new_lines.append(f"{env_var}={value}")

    env_path.write_text("\n".join(new_lines) + "\n", encoding="utf-8")
    console.print(f"[green]Updated {key} ({env_var}) successfully![/green]")


if __name__ == "__main__":
    app()
