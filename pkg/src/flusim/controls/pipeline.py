"""Daily application of control strategies."""

from collections.abc import Sequence
from typing import TYPE_CHECKING

from flusim.controls.base import DRAW_COLUMN, ControlStrategy, StrategyKind
from flusim.controls.registry import ControlRegistry
from flusim.core.exceptions import ConfigValidationError
from flusim.core.logging import get_logger

if TYPE_CHECKING:
    from flusim.core.engine import World

logger = get_logger(__name__)


def validate_strategies(strategies: Sequence[ControlStrategy]) -> None:
    """Reject overlapping windows of the same kind.

    Raises:
        ConfigValidationError: Naming the later of the two clashing entries.
    """
    for i, later in enumerate(strategies):
        for j in range(i):
            earlier = strategies[j]
            if earlier.kind is later.kind and earlier.overlaps(later):
                raise ConfigValidationError(
                    f"{later.kind.value} window {later.start_day}-{later.end_day} overlaps "
                    f"strategies[{j}] ({earlier.start_day}-{earlier.end_day})",
                    path=f"strategies[{i}]",
                )


def active_strategies(
    strategies: Sequence[ControlStrategy], day: int
) -> list[ControlStrategy]:
    """Strategies active on ``day``, in apply order."""
    order = list(StrategyKind)
    active = [s for s in strategies if s.is_active(day)]
    return sorted(active, key=lambda s: order.index(s.kind))


def apply_controls(world: "World", strategies: Sequence[ControlStrategy]) -> "World":
    """Reset the world's daily modifiers, then apply today's strategies.

    Order is Awareness, SocialDistancing, Vaccination, Quarantining. Each
    kind reads its own column of the day's control draws, so a strategy
    outside its window leaves every other random stream untouched.
    """
    world.reset_modifiers()
    active = active_strategies(strategies, world.day)
    if not active:
        return world

    draws = world.streams.uniforms("control", world.day, (len(world.agents), len(StrategyKind)))
    for strategy in active:
        control = ControlRegistry.create(strategy.kind)
        moved = control.apply(world, strategy, draws[:, DRAW_COLUMN[strategy.kind]])
        logger.debug(
            f"day {world.day}: {control.name} coverage={strategy.coverage} moved={moved}"
        )
    return world
