"""Control strategies: awareness, vaccination, social distancing, quarantining."""

from flusim.controls.base import BaseControl, ControlStrategy, StrategyKind
from flusim.controls.pipeline import active_strategies, apply_controls, validate_strategies
from flusim.controls.registry import ControlRegistry, register_control
from flusim.controls.strategies import Awareness, Quarantining, SocialDistancing, Vaccination

__all__ = [
    "Awareness",
    "BaseControl",
    "ControlRegistry",
    "ControlStrategy",
    "Quarantining",
    "SocialDistancing",
    "StrategyKind",
    "Vaccination",
    "active_strategies",
    "apply_controls",
    "register_control",
    "validate_strategies",
]
