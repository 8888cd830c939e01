"""
Control strategy models and the abstract control interface.

A ControlStrategy is configuration: which intervention, how much of it
(coverage) and on which days. A BaseControl subclass knows how to apply
one kind of strategy to a World for a single day.
"""

from abc import ABC, abstractmethod
from enum import Enum
from typing import TYPE_CHECKING, ClassVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

if TYPE_CHECKING:
    from flusim.core.engine import World


class StrategyKind(str, Enum):
    """Available interventions. Declaration order is the daily apply order."""

    AWARENESS = "awareness"
    SOCIAL_DISTANCING = "social_distancing"
    VACCINATION = "vaccination"
    QUARANTINING = "quarantining"


# Column of the daily control draw array owned by each kind
DRAW_COLUMN: dict[StrategyKind, int] = {kind: i for i, kind in enumerate(StrategyKind)}


class ControlStrategy(BaseModel):
    """One intervention active over an inclusive day window."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: StrategyKind
    coverage: float = Field(ge=0.0, le=1.0)
    start_day: int = Field(ge=0)
    end_day: int = Field(ge=0)

    @model_validator(mode="after")
    def _check_window(self) -> "ControlStrategy":
        if self.end_day < self.start_day:
            raise ValueError(f"end_day ({self.end_day}) precedes start_day ({self.start_day})")
        return self

    @property
    def window_length(self) -> int:
        return self.end_day - self.start_day + 1

    def is_active(self, day: int) -> bool:
        return self.start_day <= day <= self.end_day

    def overlaps(self, other: "ControlStrategy") -> bool:
        return self.start_day <= other.end_day and other.start_day <= self.end_day


class BaseControl(ABC):
    """Applies one strategy kind to a world for the current day."""

    KIND: ClassVar[StrategyKind]

    @abstractmethod
    def apply(self, world: "World", strategy: ControlStrategy, draws: np.ndarray) -> int:
        """Transform ``world`` in place.

        Args:
            world: World at the start of the day.
            strategy: The active strategy of this kind.
            draws: One control uniform per agent id.

        Returns:
            Number of agents whose state the control changed.
        """

    @property
    def name(self) -> str:
        return self.KIND.value
