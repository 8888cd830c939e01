"""Core simulation package: disease model, population, engine, SIR baseline.

Submodules are imported explicitly (``from flusim.core.engine import ...``);
the engine depends on ``flusim.controls``, which in turn builds on the
lighter core modules.
"""

from flusim.core.exceptions import (
    ConfigValidationError,
    FluSimError,
    IntegrationError,
    OutputError,
    ParameterError,
    SeedMismatchError,
    SimulationError,
)

__all__ = [
    "ConfigValidationError",
    "FluSimError",
    "IntegrationError",
    "OutputError",
    "ParameterError",
    "SeedMismatchError",
    "SimulationError",
]
