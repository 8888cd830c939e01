"""Control registry.

Maps each strategy kind to the class that applies it, so scenario documents
can name interventions without the engine knowing their implementations.
"""

from collections.abc import Callable
from typing import Any

from flusim.controls.base import BaseControl, StrategyKind


class ControlRegistry:
    """Registry of control implementations keyed by strategy kind."""

    _controls: dict[StrategyKind, type[BaseControl]] = {}

    @classmethod
    def register(
        cls, kind: StrategyKind
    ) -> Callable[[type[BaseControl]], type[BaseControl]]:
        """Decorator to register a control class for ``kind``."""

        def decorator(control_class: type[BaseControl]) -> type[BaseControl]:
            control_class.KIND = kind
            cls._controls[kind] = control_class
            return control_class

        return decorator

    @classmethod
    def get(cls, kind: StrategyKind) -> type[BaseControl] | None:
        return cls._controls.get(kind)

    @classmethod
    def create(cls, kind: StrategyKind) -> BaseControl:
        """Instantiate the control registered for ``kind``.

        Raises:
            KeyError: If nothing is registered for ``kind``.
        """
        control_class = cls._controls.get(kind)
        if control_class is None:
            raise KeyError(
                f"No control registered for {kind.value}. "
                f"Available: {[k.value for k in cls._controls]}"
            )
        return control_class()

    @classmethod
    def list_all(cls) -> list[dict[str, Any]]:
        """Registered controls in apply order."""
        return [
            {"kind": kind.value, "class": cls._controls[kind].__name__}
            for kind in StrategyKind
            if kind in cls._controls
        ]

    @classmethod
    def clear(cls) -> None:
        """Clear all registered controls. Mainly for testing."""
        cls._controls.clear()


def register_control(kind: StrategyKind) -> Any:
    """Convenience decorator for registering controls."""
    return ControlRegistry.register(kind)
