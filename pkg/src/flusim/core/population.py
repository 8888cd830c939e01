"""
Synthetic population.

Builds the agent population from the 2006 Egypt census age structure: age
bands with their shares and permitted social types, activity levels, uniform
placement over a square landscape, and symmetric home/work/school networks.
Synthesis is a pure function of (n, landscape_side, seed, params).
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from flusim.core.disease import FRESH_CLOCK, DiseaseClock, HealthState
from flusim.core.exceptions import ParameterError
from flusim.core.rng import RandomStreams

NETWORK_NAMES: tuple[str, ...] = ("home", "work", "school")
NO_GROUP = -1


class SocialType(str, Enum):
    """Social role of an agent."""

    SPOUSE = "SPOUSE"
    PARENT = "PARENT"
    SIBLING = "SIBLING"
    CHILD = "CHILD"
    OTHERFAMILY = "OTHERFAMILY"
    COWORKER = "COWORKER"
    GROUPMEMBER = "GROUPMEMBER"
    NEIGHBOR = "NEIGHBOR"
    FRIEND = "FRIEND"
    ADVISOR = "ADVISOR"
    SCHOOLMATE = "SCHOOLMATE"
    OTHER = "OTHER"


class ActivityLevel(str, Enum):
    """Social activity level; fixes the daily contact count."""

    LOW = "Low"
    MODERATE = "Moderate"
    HIGH = "High"

    @property
    def contacts_per_day(self) -> int:
        return _CONTACTS[self]

    @property
    def movement_multiplier(self) -> float:
        return _MOVEMENT[self]


_CONTACTS = {ActivityLevel.LOW: 2, ActivityLevel.MODERATE: 3, ActivityLevel.HIGH: 4}
_MOVEMENT = {ActivityLevel.LOW: 0.5, ActivityLevel.MODERATE: 1.0, ActivityLevel.HIGH: 1.5}
ACTIVITY_ORDER: tuple[ActivityLevel, ...] = tuple(ActivityLevel)


@dataclass(frozen=True)
class AgeBand:
    """Census age band with its population share and permitted social types."""

    label: str
    share: float
    permitted_types: tuple[SocialType, ...]


_S = SocialType
_RAW_BANDS: tuple[tuple[str, float, tuple[SocialType, ...]], ...] = (
    ("<4", 0.1060, (_S.SIBLING, _S.CHILD, _S.OTHER)),
    (
        "5-14",
        0.2110,
        (
            _S.SIBLING, _S.CHILD, _S.OTHERFAMILY, _S.COWORKER, _S.GROUPMEMBER,
            _S.NEIGHBOR, _S.FRIEND, _S.SCHOOLMATE, _S.OTHER,
        ),
    ),
    (
        "15-44",
        0.4985,
        (
            _S.SPOUSE, _S.PARENT, _S.SIBLING, _S.OTHERFAMILY, _S.COWORKER, _S.GROUPMEMBER,
            _S.NEIGHBOR, _S.FRIEND, _S.ADVISOR, _S.SCHOOLMATE, _S.OTHER,
        ),
    ),
    (
        "45-59",
        0.1236,
        (
            _S.SPOUSE, _S.PARENT, _S.SIBLING, _S.OTHERFAMILY, _S.COWORKER, _S.GROUPMEMBER,
            _S.NEIGHBOR, _S.FRIEND, _S.ADVISOR, _S.OTHER,
        ),
    ),
    (
        ">59",
        0.0608,
        (
            _S.SPOUSE, _S.PARENT, _S.SIBLING, _S.OTHERFAMILY, _S.GROUPMEMBER,
            _S.NEIGHBOR, _S.FRIEND, _S.OTHER,
        ),
    ),
)  # fmt: skip


def renormalized_shares(raw: Sequence[float]) -> np.ndarray:
    """Scale shares to sum to one (the census table sums to 99.99%)."""
    values = np.asarray(raw, dtype=float)
    return values / values.sum()


AGE_BANDS: tuple[AgeBand, ...] = tuple(
    AgeBand(label, float(share), types)
    for (label, _, types), share in zip(
        _RAW_BANDS, renormalized_shares([raw for _, raw, _ in _RAW_BANDS]), strict=True
    )
)
BAND_BY_LABEL: dict[str, AgeBand] = {band.label: band for band in AGE_BANDS}
_BAND_SHARES = np.array([band.share for band in AGE_BANDS])

WORK_BANDS = frozenset({"15-44", "45-59"})


class PopulationParams(BaseModel):
    """Tunables of population synthesis not fixed by the census."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    activity_probs: tuple[float, float, float] = Field(
        default=(0.3, 0.5, 0.2), description="P(Low), P(Moderate), P(High)"
    )
    home_size: tuple[int, int] = (2, 6)
    work_group_size: tuple[int, int] = (4, 12)
    school_group_size: tuple[int, int] = (10, 30)

    @model_validator(mode="after")
    def _check(self) -> "PopulationParams":
        if any(p < 0 for p in self.activity_probs) or abs(sum(self.activity_probs) - 1) > 1e-9:
            raise ValueError("activity_probs must be non-negative and sum to 1")
        for name in ("home_size", "work_group_size", "school_group_size"):
            low, high = getattr(self, name)
            if low < 1 or low > high:
                raise ValueError(f"{name} must satisfy 1 <= min <= max, got ({low}, {high})")
        return self


@dataclass
class Agent:
    """One simulated person. Mutable; owned by exactly one World."""

    id: int
    age_band: str
    social_type: SocialType
    activity: ActivityLevel
    x: float
    y: float
    state: HealthState = HealthState.SUSCEPTIBLE
    clock: DiseaseClock = FRESH_CLOCK
    networks: dict[str, frozenset[int]] = field(default_factory=dict)
    groups: dict[str, int] = field(default_factory=dict)
    infection_time: int | None = None
    infector: int | None = None
    course_completed: bool = False
    ever_infected: bool = False
    pending_infectors: tuple[int, ...] = ()

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def network_members(self, names: Iterable[str] = NETWORK_NAMES) -> set[int]:
        """Union of the named networks."""
        members: set[int] = set()
        for name in names:
            members |= self.networks.get(name, frozenset())
        return members


def sample_age_band(rng: np.random.Generator) -> AgeBand:
    """Draw one age band with probability equal to its share."""
    return AGE_BANDS[int(rng.choice(len(AGE_BANDS), p=_BAND_SHARES))]


def sample_age_bands(rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized band draw; returns indices into AGE_BANDS."""
    return rng.choice(len(AGE_BANDS), size=size, p=_BAND_SHARES)


def sample_social_type(band: AgeBand, rng: np.random.Generator) -> SocialType:
    """Uniform pick among the band's permitted social types."""
    return band.permitted_types[int(rng.integers(len(band.permitted_types)))]


def _chunk_sizes(total: int, bounds: tuple[int, int], rng: np.random.Generator) -> list[int]:
    """Split ``total`` into sizes within ``bounds``.

    Each size is drawn uniformly among the values that leave a remainder
    which can still be split within bounds. When no such value exists (only
    possible for narrow bounds or ``total < min``) the largest feasible chunk
    is taken instead.
    """
    low, high = bounds
    sizes: list[int] = []
    remaining = total
    while remaining > 0:
        allowed = [s for s in range(low, high + 1) if s == remaining or remaining - s >= low]
        if allowed:
            size = allowed[int(rng.integers(len(allowed)))]
        else:
            size = min(remaining, high)
        sizes.append(size)
        remaining -= size
    return sizes


def _form_groups(
    agents: Sequence[Agent],
    members: Sequence[int],
    name: str,
    bounds: tuple[int, int],
    rng: np.random.Generator,
) -> int:
    """Partition ``members`` into fully connected groups; returns group count."""
    order = [members[i] for i in rng.permutation(len(members))]
    sizes = _chunk_sizes(len(order), bounds, rng)
    start = 0
    for group_id, size in enumerate(sizes):
        group = order[start : start + size]
        start += size
        group_set = frozenset(group)
        for agent_id in group:
            agent = agents[agent_id]
            agent.groups[name] = group_id
            agent.networks[name] = group_set - {agent_id}
    return len(sizes)


def build_networks(
    agents: Sequence[Agent],
    rng: np.random.Generator,
    params: PopulationParams | None = None,
) -> Sequence[Agent]:
    """Assign home, work and school groups in place.

    Homes partition the whole population. Work groups draw from the 15-44
    and 45-59 bands (school-going 15-44 agents excepted); school groups
    from the 5-14 band plus 15-44 SCHOOLMATEs. Every group is a clique.
    """
    params = params or PopulationParams()
    for agent in agents:
        agent.networks = {name: frozenset() for name in NETWORK_NAMES}
        agent.groups = dict.fromkeys(NETWORK_NAMES, NO_GROUP)

    everyone = [a.id for a in agents]
    workers = [
        a.id
        for a in agents
        if a.age_band in WORK_BANDS and a.social_type is not SocialType.SCHOOLMATE
    ]
    pupils = [
        a.id
        for a in agents
        if a.age_band == "5-14"
        or (a.age_band == "15-44" and a.social_type is SocialType.SCHOOLMATE)
    ]

    _form_groups(agents, everyone, "home", params.home_size, rng)
    _form_groups(agents, workers, "work", params.work_group_size, rng)
    _form_groups(agents, pupils, "school", params.school_group_size, rng)
    return agents


def synthesize_population(
    n: int,
    landscape_side: float = 1000.0,
    seed: int = 0,
    params: PopulationParams | None = None,
) -> list[Agent]:
    """Create ``n`` susceptible agents with census-derived attributes.

    Raises:
        ParameterError: If ``n < 1`` or the landscape side is not positive.
    """
    if n < 1:
        raise ParameterError(f"population size must be >= 1, got {n}")
    if landscape_side <= 0:
        raise ParameterError(f"landscape_side must be > 0, got {landscape_side}")
    params = params or PopulationParams()
    rng = RandomStreams(seed).generator("population")

    band_idx = sample_age_bands(rng, n)
    activity_idx = rng.choice(len(ACTIVITY_ORDER), size=n, p=np.asarray(params.activity_probs))
    positions = rng.uniform(0.0, landscape_side, size=(n, 2))

    agents = []
    for i in range(n):
        band = AGE_BANDS[int(band_idx[i])]
        agents.append(
            Agent(
                id=i,
                age_band=band.label,
                social_type=sample_social_type(band, rng),
                activity=ACTIVITY_ORDER[int(activity_idx[i])],
                x=float(positions[i, 0]),
                y=float(positions[i, 1]),
            )
        )
    build_networks(agents, rng, params)
    return agents


POPULATION_COLUMNS: tuple[str, ...] = (
    "id",
    "age_band",
    "social_type",
    "activity",
    "x",
    "y",
    "home_group",
    "work_group",
    "school_group",
)


def population_frame(agents: Sequence[Agent]) -> pd.DataFrame:
    """Static attributes of the population as a DataFrame."""
    rows = [
        {
            "id": a.id,
            "age_band": a.age_band,
            "social_type": a.social_type.value,
            "activity": a.activity.value,
            "x": a.x,
            "y": a.y,
            **{f"{name}_group": a.groups.get(name, NO_GROUP) for name in NETWORK_NAMES},
        }
        for a in agents
    ]
    return pd.DataFrame(rows, columns=list(POPULATION_COLUMNS))


def dump_population(agents: Sequence[Agent], path: Path) -> Path:
    """Write the population CSV (UTF-8, header row)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    population_frame(agents).to_csv(path, index=False, encoding="utf-8", float_format="%.17g")
    return path


def load_population(path: Path) -> list[Agent]:
    """Read a population CSV and rebuild networks from the group columns."""
    frame = pd.read_csv(path, encoding="utf-8", float_precision="round_trip")
    missing = set(POPULATION_COLUMNS) - set(frame.columns)
    if missing:
        raise ParameterError(f"population file {path} lacks columns: {sorted(missing)}")
    frame = frame.sort_values("id").reset_index(drop=True)
    if list(frame["id"]) != list(range(len(frame))):
        raise ParameterError(f"population file {path} must hold ids 0..n-1")

    agents = [
        Agent(
            id=int(row.id),
            age_band=str(row.age_band),
            social_type=SocialType(row.social_type),
            activity=ActivityLevel(row.activity),
            x=float(row.x),
            y=float(row.y),
        )
        for row in frame.itertuples(index=False)
    ]
    for name in NETWORK_NAMES:
        column = frame[f"{name}_group"].astype(int)
        members: dict[int, set[int]] = {}
        for agent_id, group_id in enumerate(column):
            agents[agent_id].groups[name] = int(group_id)
            if group_id != NO_GROUP:
                members.setdefault(int(group_id), set()).add(agent_id)
        for agent in agents:
            group_id = agent.groups[name]
            agent.networks[name] = (
                frozenset(members[group_id] - {agent.id}) if group_id != NO_GROUP else frozenset()
            )
    return agents
