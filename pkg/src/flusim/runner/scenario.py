"""
Scenario documents.

A scenario is a JSON document validated into a frozen ScenarioConfig.
Absent disease fields take the model defaults; unknown keys are rejected.
Validation failures surface as ConfigValidationError with the offending
key path (``strategies[0].coverage``).
"""

import json
from importlib.resources import files
from pathlib import Path
from typing import Any

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from flusim.controls import ControlStrategy, validate_strategies
from flusim.core.disease import DiseaseParams
from flusim.core.engine import EngineParams, Mode
from flusim.core.exceptions import ConfigValidationError
from flusim.core.population import PopulationParams
from flusim.core.sir import SirParams

BUNDLED_PACKAGE = "flusim.scenarios"


class AlignmentSetup(BaseModel):
    """ODE side of an alignment check."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    r0: float = Field(default=3.0, gt=0.0)
    duration: float = Field(default=9.5, gt=0.0, description="Mean infectious days (1/gamma)")
    dt: float = Field(default=0.01, gt=0.0)


class ScenarioConfig(BaseModel):
    """One batch of seeded runs sharing a population and a control plan."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    days: int = Field(default=50, ge=1)
    population: int = Field(default=1000, ge=1)
    initial_infected: int = Field(default=3, ge=0)
    population_seed: int = 0
    run_seeds: tuple[int, ...] = Field(default=(), validate_default=True)
    mode: Mode = Mode.CLOSED
    landscape_side: float = Field(default=1000.0, gt=0.0)
    output_dir: Path | None = None
    disease: DiseaseParams = Field(default_factory=DiseaseParams)
    strategies: tuple[ControlStrategy, ...] = ()
    engine: EngineParams = Field(default_factory=EngineParams)
    population_params: PopulationParams = Field(default_factory=PopulationParams)
    alignment: AlignmentSetup = Field(default_factory=AlignmentSetup)

    @field_validator("run_seeds")
    @classmethod
    def _seeds_present(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value:
            raise ValueError("at least one seed required")
        if len(set(value)) != len(value):
            raise ValueError("run seeds must be distinct")
        return value

    @model_validator(mode="after")
    def _cross_checks(self) -> "ScenarioConfig":
        if self.initial_infected > self.population:
            raise ValueError(
                f"initial_infected ({self.initial_infected}) exceeds population ({self.population})"
            )
        # Raises ConfigValidationError, which pydantic lets through unchanged
        validate_strategies(self.strategies)
        return self

    def with_seeds(self, seeds: list[int] | tuple[int, ...]) -> "ScenarioConfig":
        """Copy with a different seed list.

        Raises:
            ConfigValidationError: If the new seed list is invalid.
        """
        return parse_config({**self.model_dump(mode="json"), "run_seeds": list(seeds)})

    def resolve_output_dir(self, override: Path | None = None, default: Path | None = None) -> Path:
        """Root directory for this scenario's artifacts: ``<root>/<name>``."""
        root = override or self.output_dir or default or Path("results")
        return root / self.name


def format_location(loc: tuple[int | str, ...]) -> str:
    """Render a pydantic error location as ``a.b[0].c``."""
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path


def _clean_message(message: str) -> str:
    return message.removeprefix("Value error, ")


def validation_error(error: ValidationError) -> ConfigValidationError:
    """First failing field of a pydantic error as ConfigValidationError."""
    details = error.errors()
    first = details[0]
    message = _clean_message(first["msg"])
    if len(details) > 1:
        others = "; ".join(
            f"{format_location(d['loc']) or '<root>'}: {_clean_message(d['msg'])}"
            for d in details[1:]
        )
        message = f"{message} (also: {others})"
    return ConfigValidationError(message, path=format_location(first["loc"]))


def parse_config(document: str | dict[str, Any]) -> ScenarioConfig:
    """Validate a JSON scenario document.

    Raises:
        ConfigValidationError: On malformed JSON or any schema violation.
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as e:
            raise ConfigValidationError(f"invalid JSON: {e}") from e
    else:
        data = document
    if not isinstance(data, dict):
        raise ConfigValidationError("scenario document must be a JSON object")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise validation_error(e) from e


def serialize_config(config: ScenarioConfig) -> str:
    """JSON text such that ``parse_config(serialize_config(c)) == c``."""
    return config.model_dump_json(indent=2)


def bundled_scenarios() -> list[str]:
    """Names of the scenario documents shipped with the package."""
    return sorted(
        entry.name.removesuffix(".json")
        for entry in files(BUNDLED_PACKAGE).iterdir()
        if entry.name.endswith(".json")
    )


def load_config(source: Path | str) -> ScenarioConfig:
    """Load a scenario from a file path or a bundled scenario name.

    Raises:
        ConfigValidationError: If the source is neither, or fails validation.
    """
    path = Path(source)
    if path.is_file():
        return parse_config(path.read_text(encoding="utf-8"))
    name = str(source).removesuffix(".json")
    if name in bundled_scenarios():
        return parse_config(files(BUNDLED_PACKAGE).joinpath(f"{name}.json").read_text("utf-8"))
    raise ConfigValidationError(
        f"no such file or bundled scenario: {source} (bundled: {', '.join(bundled_scenarios())})"
    )


class SirDocument(BaseModel):
    """Input of ``flusim sir``: rates as (r0 | beta) and (gamma | duration)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    r0: float | None = Field(default=None, gt=0.0)
    beta: float | None = Field(default=None, gt=0.0)
    gamma: float | None = Field(default=None, gt=0.0)
    duration: float | None = Field(default=None, gt=0.0)
    i0: float = Field(default=1e-4, ge=0.0, le=1.0)
    m0: float = Field(default=0.0, ge=0.0, lt=1.0)
    t_end: float = Field(default=200.0, gt=0.0)
    dt: float = Field(default=0.01, gt=0.0)

    @model_validator(mode="after")
    def _one_of_each(self) -> "SirDocument":
        if (self.r0 is None) == (self.beta is None):
            raise ValueError("give exactly one of r0 and beta")
        if (self.gamma is None) == (self.duration is None):
            raise ValueError("give exactly one of gamma and duration")
        if self.i0 + self.m0 > 1.0:
            raise ValueError(f"i0 + m0 must not exceed 1, got {self.i0 + self.m0}")
        return self

    def params(self) -> SirParams:
        gamma = self.gamma if self.gamma is not None else 1.0 / float(self.duration or 1.0)
        beta = self.beta if self.beta is not None else float(self.r0 or 0.0) * gamma
        return SirParams(beta=beta, gamma=gamma, i0=self.i0, m0=self.m0)


def parse_sir_document(document: str) -> SirDocument:
    """Validate the JSON input of a baseline-only integration.

    Raises:
        ConfigValidationError: On malformed JSON or any schema violation.
    """
    try:
        return SirDocument.model_validate_json(document)
    except ValidationError as e:
        if any(d["type"] == "json_invalid" for d in e.errors()):
            raise ConfigValidationError(f"invalid JSON: {e.errors()[0]['msg']}") from e
        raise validation_error(e) from e
