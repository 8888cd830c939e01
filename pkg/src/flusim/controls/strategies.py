"""
Built-in control strategies.

Awareness and SocialDistancing only set daily modifiers on the world;
Vaccination and Quarantining move agents between states using the day's
control draws.
"""

from typing import TYPE_CHECKING

import numpy as np

from flusim.controls.base import BaseControl, ControlStrategy, StrategyKind
from flusim.controls.registry import register_control
from flusim.core.disease import FRESH_CLOCK, HealthState

if TYPE_CHECKING:
    from flusim.core.engine import World


@register_control(StrategyKind.AWARENESS)
class Awareness(BaseControl):
    """More infectious agents seek care.

    Effective quarantine probability becomes ``p + coverage * (1 - p)`` for
    both the I and NQ quarantine draws.
    """

    def apply(self, world: "World", strategy: ControlStrategy, draws: np.ndarray) -> int:
        base = world.params.p_quarantine
        world.effective_params = world.params.with_quarantine(
            base + strategy.coverage * (1.0 - base)
        )
        return 0


@register_control(StrategyKind.SOCIAL_DISTANCING)
class SocialDistancing(BaseControl):
    """Scales every agent's daily contact budget by ``1 - coverage`` (floored)."""

    def apply(self, world: "World", strategy: ControlStrategy, draws: np.ndarray) -> int:
        world.contact_scale = min(world.contact_scale, 1.0 - strategy.coverage)
        return 0


@register_control(StrategyKind.VACCINATION)
class Vaccination(BaseControl):
    """Immunizes susceptible and in-contact agents.

    The per-day probability is ``coverage / window_length``, so the expected
    share reached over the whole window is about ``coverage``.
    """

    TARGETS = frozenset({HealthState.SUSCEPTIBLE, HealthState.IN_CONTACT})

    def apply(self, world: "World", strategy: ControlStrategy, draws: np.ndarray) -> int:
        daily = strategy.coverage / strategy.window_length
        moved = 0
        for agent in world.agents:
            if agent.state in self.TARGETS and draws[agent.id] < daily:
                agent.state = HealthState.IMMUNIZED
                agent.clock = FRESH_CLOCK
                agent.pending_infectors = ()
                moved += 1
        return moved


@register_control(StrategyKind.QUARANTINING)
class Quarantining(BaseControl):
    """Isolates a ``coverage`` share of infectious (I, NQ) agents each day."""

    TARGETS = frozenset({HealthState.INFECTIOUS, HealthState.NOT_QUARANTINED})

    def apply(self, world: "World", strategy: ControlStrategy, draws: np.ndarray) -> int:
        moved = 0
        for agent in world.agents:
            if agent.state in self.TARGETS and draws[agent.id] < strategy.coverage:
                agent.state = HealthState.QUARANTINED
                # Course timers keep running in isolation
                agent.clock = agent.clock.enter()
                moved += 1
        if moved:
            world.invalidate_public_index()
        return moved
