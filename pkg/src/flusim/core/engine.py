"""
Daily simulation loop.

One World is owned by one run. Each day: controls, movement, contact
selection, infection propagation, per-agent state stepping, census. All
randomness comes from per-day arrays of the run's RandomStreams (see
flusim.core.rng), consumed in that fixed order.
"""

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.spatial import cKDTree

from flusim.controls.base import ControlStrategy
from flusim.controls.pipeline import apply_controls
from flusim.core.disease import (
    INFECTED_STATES,
    STATE_ORDER,
    DiseaseParams,
    HealthState,
    draw_course_length,
    is_infectious,
    step_state,
)
from flusim.core.exceptions import ParameterError, SimulationError
from flusim.core.logging import get_logger, log_counts
from flusim.core.population import (
    ACTIVITY_ORDER,
    AGE_BANDS,
    NETWORK_NAMES,
    NO_GROUP,
    Agent,
    PopulationParams,
    SocialType,
)
from flusim.core.rng import RandomStreams, row_draws, uniform_stream

logger = get_logger(__name__)

# Per-slot contact draws: kind, pick, x, y, band, social type, activity
CONTACT_DRAWS = 7
# Per-agent state draws (step_state uses at most two)
STATE_DRAWS = 3
MAX_CONTACTS = max(level.contacts_per_day for level in ACTIVITY_ORDER)

InfectionEdge = tuple[int, int, int]
T = TypeVar("T")


class Mode(str, Enum):
    """Population mode: fixed agents, or agents created on public contact."""

    CLOSED = "closed"
    OPEN = "open"


class EngineParams(BaseModel):
    """Movement and contact tunables."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_step: float = Field(default=20.0, ge=0.0, description="Landscape units per day")
    p_network: float = Field(default=0.6, ge=0.0, le=1.0)
    public_neighbors: int = Field(default=8, ge=1)
    network_exposure: tuple[str, ...] = Field(
        default=("home",),
        description="Networks whose infectious members expose an agent every day",
    )
    max_population: int | None = Field(default=None, ge=1, description="Open mode cap")

    @field_validator("network_exposure")
    @classmethod
    def _known_networks(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        unknown = set(value) - set(NETWORK_NAMES)
        if unknown:
            raise ValueError(f"unknown networks {sorted(unknown)}; known: {list(NETWORK_NAMES)}")
        return value


@dataclass(frozen=True)
class DailyCensus:
    """State counts at the end of one simulated day."""

    day: int
    counts: dict[HealthState, int]
    new_infections: int
    cumulative_infected: int
    population: int

    @property
    def infected(self) -> int:
        """C + E + I + Q + NQ."""
        return sum(self.counts[state] for state in INFECTED_STATES)

    def as_row(self) -> dict[str, int]:
        return {
            "day": self.day,
            **{state.value: self.counts[state] for state in STATE_ORDER},
            "new_infections": self.new_infections,
            "cumulative_infected": self.cumulative_infected,
        }


CENSUS_COLUMNS: tuple[str, ...] = (
    "day",
    *(state.value for state in STATE_ORDER),
    "new_infections",
    "cumulative_infected",
)


@dataclass
class World:
    """Complete mutable state of one simulation run."""

    agents: list[Agent]
    params: DiseaseParams
    streams: RandomStreams
    landscape_side: float
    mode: Mode = Mode.CLOSED
    engine: EngineParams = field(default_factory=EngineParams)
    population_params: PopulationParams = field(default_factory=PopulationParams)
    day: int = 0
    infection_edges: list[InfectionEdge] = field(default_factory=list)
    cumulative_infected: int = 0
    capacity: int = 0
    # Daily modifiers written by controls
    effective_params: DiseaseParams | None = None
    contact_scale: float = 1.0
    exposure_sources: dict[int, tuple[int, ...]] = field(default_factory=dict)
    _public: dict[int, list[int]] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.initial_size = len(self.agents)
        if not self.capacity:
            self.capacity = self.engine.max_population or 2 * self.initial_size

    @property
    def seed(self) -> int:
        return self.streams.seed

    @property
    def day_params(self) -> DiseaseParams:
        """Disease parameters in force today (controls may override)."""
        return self.effective_params or self.params

    def reset_modifiers(self) -> None:
        self.effective_params = None
        self.contact_scale = 1.0

    def contacts_for(self, agent: Agent) -> int:
        """Today's contact budget of ``agent`` after distancing."""
        # Epsilon keeps e.g. 3 * (1 - 0.1) from flooring to 1
        return max(0, math.floor(agent.activity.contacts_per_day * self.contact_scale + 1e-9))

    def is_reachable(self, agent: Agent) -> bool:
        """Alive and not isolated: may select and be selected as contact."""
        return agent.state not in (HealthState.DEAD, HealthState.QUARANTINED)

    def invalidate_public_index(self) -> None:
        self._public = None

    def public_candidates(self, agent: Agent) -> list[int]:
        """Nearest reachable agents around ``agent`` (self excluded)."""
        if self._public is None:
            self._public = self._build_public_index()
        return self._public.get(agent.id, [])

    def _build_public_index(self) -> dict[int, list[int]]:
        eligible = [a for a in self.agents if self.is_reachable(a)]
        if len(eligible) < 2:
            return {}
        points = np.array([[a.x, a.y] for a in eligible])
        ids = np.array([a.id for a in eligible])
        k = min(self.engine.public_neighbors + 1, len(eligible))
        _, idx = cKDTree(points).query(points, k=k)
        idx = np.atleast_2d(idx)
        index: dict[int, list[int]] = {}
        for row, agent_id in zip(idx, ids, strict=True):
            neighbors = [int(ids[j]) for j in row if ids[j] != agent_id]
            index[int(agent_id)] = neighbors[: self.engine.public_neighbors]
        return index


def copy_agents(agents: Iterable[Agent]) -> list[Agent]:
    """Independent copies; network sets are immutable and shared."""
    return [replace(a, networks=dict(a.networks), groups=dict(a.groups)) for a in agents]


def create_world(
    agents: Sequence[Agent],
    params: DiseaseParams | None = None,
    *,
    seed: int = 0,
    initial_infected: int = 3,
    landscape_side: float = 1000.0,
    mode: Mode = Mode.CLOSED,
    engine: EngineParams | None = None,
    population_params: PopulationParams | None = None,
) -> World:
    """Build a World from a population and seed the initial infections.

    The population is copied, so one synthesized population can back many
    runs. ``initial_infected`` agents, chosen by the run seed, start
    Infectious with a freshly drawn course.

    Raises:
        ParameterError: If ``initial_infected`` is negative or exceeds the population.
    """
    if not 0 <= initial_infected <= len(agents):
        raise ParameterError(
            f"initial_infected must be within [0, {len(agents)}], got {initial_infected}"
        )
    params = params or DiseaseParams()
    streams = RandomStreams(seed)
    world = World(
        agents=copy_agents(agents),
        params=params,
        streams=streams,
        landscape_side=landscape_side,
        mode=mode,
        engine=engine or EngineParams(),
        population_params=population_params or PopulationParams(),
    )
    rng = streams.generator("seeding")
    chosen = rng.permutation(len(world.agents))[:initial_infected]
    draws = uniform_stream(rng)
    for agent_id in sorted(int(i) for i in chosen):
        agent = world.agents[agent_id]
        agent.state = HealthState.INFECTIOUS
        agent.clock = agent.clock.enter(course_length=draw_course_length(params, draws))
        agent.infection_time = 0
        agent.ever_infected = True
    world.cumulative_infected = initial_infected
    return world


def _reflect(value: float, side: float) -> float:
    """Fold ``value`` back into [0, side] by mirror reflection."""
    if side <= 0:
        return 0.0
    period = 2.0 * side
    value = value % period
    return period - value if value > side else value


def move_agents(world: World, draws: np.ndarray | None = None) -> World:
    """Random step for every reachable agent, reflected at the landscape edge.

    Step length is uniform in [0, max_step x activity multiplier]; Dead and
    Quarantined agents stay put.
    """
    if draws is None:
        draws = world.streams.uniforms("movement", world.day, (len(world.agents), 2))
    side = world.landscape_side
    for agent in world.agents:
        if not world.is_reachable(agent):
            continue
        angle, fraction = draws[agent.id]
        length = fraction * world.engine.max_step * agent.activity.movement_multiplier
        if length == 0.0:
            continue
        agent.x = _reflect(agent.x + length * math.cos(2 * math.pi * angle), side)
        agent.y = _reflect(agent.y + length * math.sin(2 * math.pi * angle), side)
    world.invalidate_public_index()
    return world


def _inverse_cdf(u: float, weights: Sequence[float]) -> int:
    cumulative = 0.0
    for index, weight in enumerate(weights):
        cumulative += weight
        if u < cumulative:
            return index
    return len(weights) - 1


def _pick(pool: Sequence[T], u: float) -> T:
    return pool[min(int(u * len(pool)), len(pool) - 1)]


def _spawn_agent(world: World, slot: np.ndarray) -> Agent:
    """Open mode: a new susceptible agent placed at random."""
    band = AGE_BANDS[_inverse_cdf(float(slot[4]), [b.share for b in AGE_BANDS])]
    social = _pick(band.permitted_types, float(slot[5]))
    activity = ACTIVITY_ORDER[_inverse_cdf(float(slot[6]), world.population_params.activity_probs)]
    agent = Agent(
        id=len(world.agents),
        age_band=band.label,
        social_type=social,
        activity=activity,
        x=float(slot[2]) * world.landscape_side,
        y=float(slot[3]) * world.landscape_side,
        networks={name: frozenset() for name in NETWORK_NAMES},
        groups=dict.fromkeys(NETWORK_NAMES, NO_GROUP),
    )
    world.agents.append(agent)
    return agent


def select_contacts(agent: Agent, world: World, draws: np.ndarray) -> list[int]:
    """Choose today's contacts of ``agent``.

    Each of the agent's slots goes to a random reachable member of its own
    networks with probability ``p_network``, otherwise to a public agent: a
    random pick among the nearest reachable neighbours (Closed mode) or a
    newly created susceptible agent (Open mode, until the cap is reached).

    Args:
        agent: The selecting agent.
        world: Current world.
        draws: Array of shape (slots, CONTACT_DRAWS) of uniforms.

    Returns:
        Contact ids; fewer than the budget only when nobody is reachable.
    """
    if not world.is_reachable(agent):
        return []
    pool = sorted(m for m in agent.network_members() if world.is_reachable(world.agents[m]))
    contacts: list[int] = []
    for slot in draws[: world.contacts_for(agent)]:
        if pool and slot[0] < world.engine.p_network:
            contacts.append(_pick(pool, float(slot[1])))
        elif world.mode is Mode.OPEN and len(world.agents) < world.capacity:
            contacts.append(_spawn_agent(world, slot).id)
        else:
            public = world.public_candidates(agent)
            if public:
                contacts.append(_pick(public, float(slot[1])))
    return contacts


def propagate_infection(world: World, contacts: dict[int, list[int]]) -> dict[int, int]:
    """Count distinct infectious partners of every susceptible/in-contact agent.

    Partners are today's encounters in either direction plus infectious
    members of the ``network_exposure`` networks. Quarantined agents are
    isolated and never count. Contributing ids are stored in
    ``world.exposure_sources`` for infector attribution.
    """
    at_risk = (HealthState.SUSCEPTIBLE, HealthState.IN_CONTACT)
    sources: dict[int, set[int]] = {}

    def expose(target: int, source: int) -> None:
        if world.agents[target].state in at_risk and is_infectious(world.agents[source].state):
            sources.setdefault(target, set()).add(source)

    for agent_id, partners in contacts.items():
        for partner in partners:
            expose(agent_id, partner)
            expose(partner, agent_id)

    for agent in world.agents:
        if agent.state not in at_risk:
            continue
        for member in agent.network_members(world.engine.network_exposure):
            expose(agent.id, member)

    world.exposure_sources = {k: tuple(sorted(v)) for k, v in sources.items()}
    return {k: len(v) for k, v in world.exposure_sources.items()}


def census(world: World, new_infections: int) -> DailyCensus:
    """Tally states; Closed mode also checks conservation."""
    tally = Counter(agent.state for agent in world.agents)
    counts = {state: tally.get(state, 0) for state in STATE_ORDER}
    if world.mode is Mode.CLOSED and sum(counts.values()) != world.initial_size:
        raise SimulationError(
            f"day {world.day}: state counts sum to {sum(counts.values())}, "
            f"expected {world.initial_size}"
        )
    return DailyCensus(
        day=world.day,
        counts=counts,
        new_infections=new_infections,
        cumulative_infected=world.cumulative_infected,
        population=len(world.agents),
    )


def _step_agents(world: World, counts: dict[int, int]) -> int:
    """Apply step_state to every agent; returns today's C -> E transitions.

    Reinfections count as new infections but not toward the cumulative total,
    which tracks distinct agents.
    """
    n = len(world.agents)
    state_draws = world.streams.uniforms("state", world.day, (n, STATE_DRAWS))
    attribution = world.streams.uniforms("infection", world.day, n)
    params = world.day_params
    new_infections = 0

    for agent in world.agents:
        before = agent.state
        after, agent.clock = step_state(
            before, agent.clock, counts.get(agent.id, 0), params, row_draws(state_draws[agent.id])
        )
        agent.state = after
        if before is HealthState.IN_CONTACT and after is HealthState.EXPOSED:
            pending = agent.pending_infectors
            agent.infector = _pick(pending, float(attribution[agent.id])) if pending else None
            agent.infection_time = world.day
            if agent.infector is not None:
                world.infection_edges.append((agent.infector, agent.id, world.day))
            agent.pending_infectors = ()
            new_infections += 1
            if not agent.ever_infected:
                agent.ever_infected = True
                world.cumulative_infected += 1
        elif after is HealthState.IN_CONTACT:
            agent.pending_infectors = world.exposure_sources.get(agent.id, ())
        elif after is HealthState.SUSCEPTIBLE:
            agent.pending_infectors = ()
        elif after is HealthState.INFECTIOUS and before is not after:
            agent.course_completed = False
        elif after in (HealthState.RECOVERED, HealthState.DEAD) and before in (
            HealthState.QUARANTINED,
            HealthState.NOT_QUARANTINED,
        ):
            agent.course_completed = True

    return new_infections


def step_day(
    world: World,
    strategies: Sequence[ControlStrategy] = (),
) -> tuple[World, DailyCensus]:
    """Simulate one day and return its census.

    Order: controls, movement, contact selection, infection propagation,
    state stepping, census.
    """
    apply_controls(world, strategies)

    move_agents(world)

    contact_draws = world.streams.uniforms(
        "contact", world.day, (len(world.agents), MAX_CONTACTS, CONTACT_DRAWS)
    )
    contacts: dict[int, list[int]] = {}
    # Open mode appends agents while iterating; only the day's initial agents select
    for agent in list(world.agents):
        chosen = select_contacts(agent, world, contact_draws[agent.id])
        if chosen:
            contacts[agent.id] = chosen

    exposure = propagate_infection(world, contacts)
    new_infections = _step_agents(world, exposure)
    record = census(world, new_infections)
    log_counts(logger, f"day {world.day}", record.as_row())
    world.day += 1
    return world, record


def run(
    world: World,
    days: int,
    strategies: Sequence[ControlStrategy] = (),
) -> list[DailyCensus]:
    """Run ``days`` consecutive days; census day indices are 0..days-1."""
    if days < 1:
        raise ParameterError(f"days must be >= 1, got {days}")
    return [step_day(world, strategies)[1] for _ in range(days)]


def completed_agents(world: World) -> set[int]:
    """Agents whose infectious course has ended (R, M, D or susceptible again)."""
    return {agent.id for agent in world.agents if agent.course_completed}


def estimate_R(edges: Iterable[InfectionEdge], completed: Iterable[int]) -> float | None:
    """Mean number of secondary infections per completed case.

    Returns:
        The mean out-degree over ``completed`` in the infection graph, or
        None while no course has completed.
    """
    finished = set(completed)
    if not finished:
        return None
    out_degree = Counter(infector for infector, _, _ in edges)
    return sum(out_degree[agent_id] for agent_id in finished) / len(finished)


def social_type_breakdown(world: World) -> pd.DataFrame:
    """Current state counts per social type (12 rows x 9 state columns)."""
    table = pd.DataFrame(
        0,
        index=pd.Index([t.value for t in SocialType], name="social_type"),
        columns=[state.value for state in STATE_ORDER],
    )
    for agent in world.agents:
        table.loc[agent.social_type.value, agent.state.value] += 1
    return table
