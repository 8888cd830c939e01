"""Shared fixtures for flusim tests."""

from collections.abc import Callable

import pytest

from flusim.core.disease import HealthState
from flusim.core.population import (
    NETWORK_NAMES,
    NO_GROUP,
    ActivityLevel,
    Agent,
    SocialType,
    synthesize_population,
)

AgentFactory = Callable[..., Agent]


@pytest.fixture(scope="session")
def small_population() -> list[Agent]:
    """200 agents on a 500-unit landscape. Tests must copy before mutating."""
    return synthesize_population(200, landscape_side=500.0, seed=11)


@pytest.fixture
def make_agent() -> AgentFactory:
    """Build a single agent with explicit networks."""

    def factory(
        agent_id: int,
        x: float = 0.0,
        y: float = 0.0,
        state: HealthState = HealthState.SUSCEPTIBLE,
        activity: ActivityLevel = ActivityLevel.MODERATE,
        home: frozenset[int] = frozenset(),
        work: frozenset[int] = frozenset(),
        school: frozenset[int] = frozenset(),
    ) -> Agent:
        networks = {"home": home, "work": work, "school": school}
        return Agent(
            id=agent_id,
            age_band="15-44",
            social_type=SocialType.OTHER,
            activity=activity,
            x=x,
            y=y,
            state=state,
            networks={name: frozenset(networks[name]) for name in NETWORK_NAMES},
            groups=dict.fromkeys(NETWORK_NAMES, NO_GROUP),
        )

    return factory
