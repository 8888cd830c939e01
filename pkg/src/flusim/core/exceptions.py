"""Custom exceptions for flusim.

Provides a unified exception hierarchy for consistent error handling.
"""


class FluSimError(Exception):
    """Base exception for all flusim errors."""


class ConfigValidationError(FluSimError):
    """Scenario document failed validation.

    Raised when a scenario config or strategy list violates the schema or a
    cross-field rule. ``path`` names the offending key, e.g.
    ``strategies[0].coverage``.
    """

    def __init__(self, message: str, path: str = "") -> None:
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class ParameterError(FluSimError, ValueError):
    """Model parameters invalid at construction.

    Raised for values no simulation can run with, such as an empty
    population or a non-positive integration step.
    """


class IntegrationError(FluSimError):
    """ODE integration produced a non-finite state.

    Usually means the step size is too large for the rates involved.
    """


class SimulationError(FluSimError):
    """Engine invariant violated during a run."""


class SeedMismatchError(FluSimError):
    """Two summaries cannot be paired.

    Raised when comparing scenarios that differ in seed set, population size
    or simulated days.
    """


class OutputError(FluSimError):
    """Output directory cannot be created or written."""
