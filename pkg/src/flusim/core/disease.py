"""
Extended SIR disease model.

Nine health states and the per-agent daily transition function. Everything
here is a pure function of explicit inputs plus an injected iterator of
uniform draws, so concurrent runs are safe as long as each owns its draws.

State chart (edges only, staying put is always allowed):

    S  -> C            C  -> E | S        E  -> I
    I  -> Q | NQ       Q  -> R | D        NQ -> Q | D
    R  -> M | S        D, M absorbing
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from flusim.core.rng import Draws


class HealthState(str, Enum):
    """Disease state of an agent. The value doubles as CSV column name."""

    SUSCEPTIBLE = "S"
    IN_CONTACT = "C"
    EXPOSED = "E"
    INFECTIOUS = "I"
    QUARANTINED = "Q"
    NOT_QUARANTINED = "NQ"
    DEAD = "D"
    RECOVERED = "R"
    IMMUNIZED = "M"


# Census column order
STATE_ORDER: tuple[HealthState, ...] = tuple(HealthState)

INFECTIOUS_STATES = frozenset({HealthState.INFECTIOUS, HealthState.NOT_QUARANTINED})
INFECTED_STATES = frozenset(
    {
        HealthState.IN_CONTACT,
        HealthState.EXPOSED,
        HealthState.INFECTIOUS,
        HealthState.QUARANTINED,
        HealthState.NOT_QUARANTINED,
    }
)
REMOVED_STATES = frozenset({HealthState.DEAD, HealthState.RECOVERED, HealthState.IMMUNIZED})
ABSORBING_STATES = frozenset({HealthState.DEAD, HealthState.IMMUNIZED})

_TRANSITIONS: dict[HealthState, frozenset[HealthState]] = {
    HealthState.SUSCEPTIBLE: frozenset({HealthState.IN_CONTACT}),
    HealthState.IN_CONTACT: frozenset({HealthState.EXPOSED, HealthState.SUSCEPTIBLE}),
    HealthState.EXPOSED: frozenset({HealthState.INFECTIOUS}),
    HealthState.INFECTIOUS: frozenset({HealthState.QUARANTINED, HealthState.NOT_QUARANTINED}),
    HealthState.QUARANTINED: frozenset({HealthState.RECOVERED, HealthState.DEAD}),
    HealthState.NOT_QUARANTINED: frozenset({HealthState.QUARANTINED, HealthState.DEAD}),
    HealthState.RECOVERED: frozenset({HealthState.IMMUNIZED, HealthState.SUSCEPTIBLE}),
    HealthState.DEAD: frozenset(),
    HealthState.IMMUNIZED: frozenset(),
}


class DiseaseParams(BaseModel):
    """Disease model parameters. Defaults are pandemic H1N1 influenza values."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    latent_days: int = Field(default=2, ge=0, description="Incubation time before contagious")
    p_transmit: float = Field(
        default=0.9, ge=0.0, le=1.0, description="Per infectious contact per day"
    )
    p_quarantine: float = Field(default=0.1, ge=0.0, le=1.0)
    p_recover: float = Field(default=0.9, ge=0.0, le=1.0)
    p_dead: float = Field(default=0.14, ge=0.0, le=1.0)
    p_immunize: float = Field(default=0.95, ge=0.0, le=1.0)
    t_recover_min: int = Field(default=5, ge=1)
    t_recover_max: int = Field(default=14, ge=1)

    @model_validator(mode="after")
    def _check_course_bounds(self) -> "DiseaseParams":
        if self.t_recover_min > self.t_recover_max:
            raise ValueError(
                f"t_recover_min ({self.t_recover_min}) exceeds t_recover_max ({self.t_recover_max})"
            )
        return self

    @property
    def mean_course_length(self) -> float:
        return (self.t_recover_min + self.t_recover_max) / 2

    @property
    def nq_daily_death_hazard(self) -> float:
        """Daily death probability of an untreated agent.

        Spread so that a full untreated course of mean length accumulates
        ``p_dead``.
        """
        return 1.0 - (1.0 - self.p_dead) ** (1.0 / self.mean_course_length)

    def with_quarantine(self, p_quarantine: float) -> "DiseaseParams":
        """Copy with a different quarantine-seeking probability."""
        return self.model_copy(update={"p_quarantine": p_quarantine})


@dataclass(frozen=True)
class DiseaseClock:
    """Per-agent disease timers.

    Attributes:
        days_in_state: Steps spent in the current state (0 on entry).
        course_length: Infectious course length, drawn on entering I.
        days_since_onset: Steps since entering I; the course ends when it
            reaches ``course_length``.
        exposure_count: Infectious contacts recorded while S/C; the next
            in-contact step draws against it.
    """

    days_in_state: int = 0
    course_length: int = 0
    days_since_onset: int = 0
    exposure_count: int = 0

    def __post_init__(self) -> None:
        if min(self.days_in_state, self.days_since_onset, self.exposure_count) < 0:
            raise ValueError("clock fields must be non-negative")

    def tick(self) -> "DiseaseClock":
        return replace(self, days_in_state=self.days_in_state + 1)

    def enter(self, **changes: int) -> "DiseaseClock":
        """Clock for a freshly entered state."""
        return replace(self, days_in_state=0, **changes)

    @property
    def course_over(self) -> bool:
        return self.course_length > 0 and self.days_since_onset >= self.course_length


FRESH_CLOCK = DiseaseClock()


def allowed_transitions(state: HealthState) -> frozenset[HealthState]:
    """Edge set of the state chart leaving ``state``."""
    return _TRANSITIONS[state]


def is_infectious(state: HealthState) -> bool:
    """Whether an agent in ``state`` transmits to its contacts."""
    return state in INFECTIOUS_STATES


def infection_probability(contacts: int, p_transmit: float) -> float:
    """Probability that at least one of ``contacts`` independent exposures infects."""
    if contacts <= 0:
        return 0.0
    return 1.0 - (1.0 - p_transmit) ** contacts


def draw_course_length(params: DiseaseParams, draws: Draws) -> int:
    """Uniform integer course length in [t_recover_min, t_recover_max]."""
    span = params.t_recover_max - params.t_recover_min + 1
    offset = min(int(math.floor(next(draws) * span)), span - 1)
    return params.t_recover_min + offset


def step_state(
    state: HealthState,
    clock: DiseaseClock,
    infectious_contacts: int,
    params: DiseaseParams,
    draws: Draws,
) -> tuple[HealthState, DiseaseClock]:
    """Advance one agent by one day.

    Args:
        state: Current health state.
        clock: Current disease clock.
        infectious_contacts: Distinct infectious partners met today.
        params: Disease parameters (Awareness passes a boosted p_quarantine).
        draws: Uniforms in [0, 1); at most two are consumed.

    Returns:
        Next (state, clock). The state is either unchanged or a member of
        ``allowed_transitions(state)``.
    """
    if infectious_contacts < 0:
        raise ValueError(f"infectious_contacts must be >= 0, got {infectious_contacts}")

    if state in ABSORBING_STATES:
        return state, clock

    if state is HealthState.SUSCEPTIBLE:
        if infectious_contacts > 0:
            return HealthState.IN_CONTACT, FRESH_CLOCK.enter(exposure_count=infectious_contacts)
        return state, clock.tick()

    if state is HealthState.IN_CONTACT:
        if next(draws) < infection_probability(clock.exposure_count, params.p_transmit):
            return HealthState.EXPOSED, FRESH_CLOCK
        if infectious_contacts == 0:
            return HealthState.SUSCEPTIBLE, FRESH_CLOCK
        return state, replace(clock.tick(), exposure_count=infectious_contacts)

    if state is HealthState.EXPOSED:
        if clock.days_in_state + 1 >= params.latent_days:
            course = draw_course_length(params, draws)
            return HealthState.INFECTIOUS, FRESH_CLOCK.enter(course_length=course)
        return state, clock.tick()

    # Course-bearing states advance the onset counter
    onset = replace(clock, days_since_onset=clock.days_since_onset + 1)

    if state is HealthState.INFECTIOUS:
        if next(draws) < params.p_quarantine:
            return HealthState.QUARANTINED, onset.enter()
        return HealthState.NOT_QUARANTINED, onset.enter()

    if state is HealthState.NOT_QUARANTINED:
        if onset.course_over:
            # Untreated agents still alive at course end seek care
            return HealthState.QUARANTINED, onset.enter()
        if next(draws) < params.p_quarantine:
            return HealthState.QUARANTINED, onset.enter()
        if next(draws) < params.nq_daily_death_hazard:
            return HealthState.DEAD, onset.enter()
        return state, onset.tick()

    if state is HealthState.QUARANTINED:
        if onset.course_over:
            if next(draws) < params.p_recover:
                return HealthState.RECOVERED, onset.enter()
            return HealthState.DEAD, onset.enter()
        return state, onset.tick()

    # Recovered: immunity is decided the day after recovery
    if next(draws) < params.p_immunize:
        return HealthState.IMMUNIZED, FRESH_CLOCK
    return HealthState.SUSCEPTIBLE, FRESH_CLOCK
