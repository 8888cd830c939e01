"""Tests for the daily simulation loop."""

from collections.abc import Callable

import numpy as np
import pytest

from flusim.core.disease import DiseaseParams, HealthState
from flusim.core.engine import (
    CENSUS_COLUMNS,
    CONTACT_DRAWS,
    MAX_CONTACTS,
    EngineParams,
    Mode,
    World,
    _reflect,
    census,
    create_world,
    estimate_R,
    move_agents,
    propagate_infection,
    run,
    select_contacts,
    social_type_breakdown,
    step_day,
)
from flusim.core.exceptions import ParameterError, SimulationError
from flusim.core.population import ActivityLevel, Agent

AgentFactory = Callable[..., Agent]

S = HealthState.SUSCEPTIBLE
I = HealthState.INFECTIOUS  # noqa: E741
NQ = HealthState.NOT_QUARANTINED
Q = HealthState.QUARANTINED
D = HealthState.DEAD
M = HealthState.IMMUNIZED


def world_of(agents: list[Agent], **kwargs: object) -> World:
    """World over hand-built agents with no seeded infections."""
    kwargs.setdefault("initial_infected", 0)
    kwargs.setdefault("landscape_side", 100.0)
    return create_world(agents, **kwargs)  # type: ignore[arg-type]


class TestCreateWorld:
    """Test create_world seeding."""

    def test_seeds_initial_infections(self, small_population: list[Agent]) -> None:
        """Test exactly initial_infected agents start infectious."""
        world = create_world(small_population, seed=1, landscape_side=500.0)
        infectious = [a for a in world.agents if a.state is I]
        assert len(infectious) == 3
        assert world.cumulative_infected == 3
        assert all(a.clock.course_length >= 5 for a in infectious)
        assert [a.id for a in world.agents if a.ever_infected] == [a.id for a in infectious]

    def test_population_not_mutated(self, small_population: list[Agent]) -> None:
        """Test the source population stays susceptible."""
        create_world(small_population, seed=1, initial_infected=50)
        assert all(a.state is S for a in small_population)
        assert not any(a.ever_infected for a in small_population)

    def test_too_many_initial_infected(self, small_population: list[Agent]) -> None:
        """Test seeding more agents than exist raises ParameterError."""
        with pytest.raises(ParameterError):
            create_world(small_population, initial_infected=201)

    def test_capacity_defaults_to_double(self, small_population: list[Agent]) -> None:
        """Test the Open mode cap defaults to twice the initial size."""
        assert create_world(small_population).capacity == 400
        engine = EngineParams(max_population=250)
        assert create_world(small_population, engine=engine).capacity == 250


class TestMovement:
    """Test move_agents."""

    def test_reflect(self) -> None:
        """Test positions fold back at both edges."""
        assert _reflect(-5.0, 100.0) == pytest.approx(5.0)
        assert _reflect(105.0, 100.0) == pytest.approx(95.0)
        assert _reflect(50.0, 100.0) == pytest.approx(50.0)

    def test_quarantined_and_dead_stay(self, make_agent: AgentFactory) -> None:
        """Test Q and D agents keep their positions."""
        world = world_of(
            [make_agent(0, 10, 10, state=Q), make_agent(1, 20, 20, state=D), make_agent(2, 30, 30)]
        )
        move_agents(world, np.full((3, 2), 0.9))
        assert world.agents[0].position == (10, 10)
        assert world.agents[1].position == (20, 20)
        assert world.agents[2].position != (30, 30)

    def test_positions_stay_in_bounds(self, small_population: list[Agent]) -> None:
        """Test 100 days of movement never leave the landscape."""
        world = create_world(small_population, landscape_side=500.0)
        for day in range(100):
            world.day = day
            move_agents(world)
            for agent in world.agents:
                assert 0.0 <= agent.x <= 500.0
                assert 0.0 <= agent.y <= 500.0

    def test_zero_step_changes_nothing(self, small_population: list[Agent]) -> None:
        """Test max_step 0 leaves every position unchanged."""
        world = create_world(small_population, engine=EngineParams(max_step=0.0))
        before = [a.position for a in world.agents]
        move_agents(world)
        assert [a.position for a in world.agents] == before

    def test_step_length_bounded(self, make_agent: AgentFactory) -> None:
        """Test a High agent moves at most 1.5 x max_step."""
        agent = make_agent(0, 50, 50, activity=ActivityLevel.HIGH)
        world = world_of([agent], landscape_side=1000.0)
        move_agents(world, np.array([[0.0, 1.0]]))
        assert world.agents[0].x == pytest.approx(80.0)
        assert world.agents[0].y == pytest.approx(50.0)


class TestSelectContacts:
    """Test select_contacts."""

    def test_high_activity_gets_four(self, make_agent: AgentFactory) -> None:
        """Test a High agent with reachable neighbours fills all four slots."""
        agents = [make_agent(0, 50, 50, activity=ActivityLevel.HIGH)]
        agents += [make_agent(i, 50 + i, 50) for i in range(1, 6)]
        world = world_of(agents)
        draws = np.full((MAX_CONTACTS, CONTACT_DRAWS), 0.5)
        contacts = select_contacts(world.agents[0], world, draws)
        assert len(contacts) == 4
        assert 0 not in contacts

    def test_budget_follows_activity(self, make_agent: AgentFactory) -> None:
        """Test Low and Moderate agents take two and three contacts."""
        agents = [
            make_agent(0, 50, 50, activity=ActivityLevel.LOW),
            make_agent(1, 51, 50, activity=ActivityLevel.MODERATE),
            make_agent(2, 52, 50),
        ]
        world = world_of(agents)
        draws = np.full((MAX_CONTACTS, CONTACT_DRAWS), 0.5)
        assert len(select_contacts(world.agents[0], world, draws)) == 2
        assert len(select_contacts(world.agents[1], world, draws)) == 3

    def test_network_fraction(self, make_agent: AgentFactory) -> None:
        """Test 0.6 +- 0.01 of 10^5 slots go to the network."""
        agents = [
            make_agent(0, 0, 0, activity=ActivityLevel.HIGH, home=frozenset({1})),
            make_agent(1, 95, 95, home=frozenset({0})),
        ]
        agents += [make_agent(i, float(i), 1.0) for i in range(2, 10)]
        world = world_of(agents)
        rng = np.random.default_rng(9)
        draws = rng.random((25_000, MAX_CONTACTS, CONTACT_DRAWS))
        network = total = 0
        for row in draws:
            contacts = select_contacts(world.agents[0], world, row)
            total += len(contacts)
            network += sum(c == 1 for c in contacts)
        assert total == 100_000
        assert abs(network / total - 0.6) < 0.01

    def test_unreachable_never_selected(self, small_population: list[Agent]) -> None:
        """Test Dead and Quarantined agents never appear as contacts."""
        world = create_world(small_population, landscape_side=500.0)
        for agent in world.agents[:40]:
            agent.state = D if agent.id % 2 else Q
        blocked = {a.id for a in world.agents[:40]}
        draws = world.streams.uniforms("contact", 0, (200, MAX_CONTACTS, CONTACT_DRAWS))
        for agent in world.agents:
            contacts = select_contacts(agent, world, draws[agent.id])
            if agent.id in blocked:
                assert contacts == []
            assert blocked.isdisjoint(contacts)

    def test_isolated_agent_has_no_contacts(self, make_agent: AgentFactory) -> None:
        """Test an agent alone in the world selects nobody."""
        world = world_of([make_agent(0)])
        assert select_contacts(world.agents[0], world, np.full((4, 7), 0.5)) == []

    def test_distancing_scales_budget(self, make_agent: AgentFactory) -> None:
        """Test a contact scale of 0.5 halves a High agent's budget."""
        agents = [make_agent(0, 50, 50, activity=ActivityLevel.HIGH), make_agent(1, 51, 50)]
        world = world_of(agents)
        world.contact_scale = 0.5
        assert world.contacts_for(world.agents[0]) == 2
        world.contact_scale = 0.9
        assert world.contacts_for(world.agents[1]) == 2


class TestPropagateInfection:
    """Test propagate_infection."""

    def test_counts_infectious_partners(self, make_agent: AgentFactory) -> None:
        """Test I and NQ partners count, Q partners do not."""
        world = world_of(
            [make_agent(0), make_agent(1, state=I), make_agent(2, state=NQ), make_agent(3, state=Q)]
        )
        assert propagate_infection(world, {0: [1, 2, 3]}) == {0: 2}
        assert world.exposure_sources == {0: (1, 2)}

    def test_encounters_are_symmetric(self, make_agent: AgentFactory) -> None:
        """Test being selected by an infectious agent exposes the target."""
        world = world_of([make_agent(0), make_agent(1, state=I)])
        assert propagate_infection(world, {1: [0]}) == {0: 1}

    def test_partners_counted_once(self, make_agent: AgentFactory) -> None:
        """Test repeated encounters with one partner count once."""
        world = world_of([make_agent(0), make_agent(1, state=I)])
        assert propagate_infection(world, {0: [1, 1], 1: [0]}) == {0: 1}

    def test_home_exposure(self, make_agent: AgentFactory) -> None:
        """Test infectious household members expose without an encounter."""
        world = world_of(
            [make_agent(0, home=frozenset({1})), make_agent(1, state=I, home=frozenset({0}))]
        )
        assert propagate_infection(world, {}) == {0: 1}

    def test_work_exposure_needs_opt_in(self, make_agent: AgentFactory) -> None:
        """Test work networks expose only when listed in network_exposure."""
        agents = [make_agent(0, work=frozenset({1})), make_agent(1, state=I, work=frozenset({0}))]
        assert propagate_infection(world_of(agents), {}) == {}
        engine = EngineParams(network_exposure=("home", "work"))
        assert propagate_infection(world_of(agents, engine=engine), {}) == {0: 1}

    def test_only_susceptible_and_contact_exposed(self, make_agent: AgentFactory) -> None:
        """Test agents already on the course are not counted."""
        world = world_of([make_agent(0, state=HealthState.EXPOSED), make_agent(1, state=I)])
        assert propagate_infection(world, {0: [1]}) == {}


class TestRun:
    """Test step_day and run over whole runs."""

    def test_conservation(self, small_population: list[Agent]) -> None:
        """Test state counts sum to the population every day."""
        world = create_world(small_population, seed=2, landscape_side=500.0)
        for record in run(world, 30):
            assert sum(record.counts.values()) == 200
            assert record.population == 200

    def test_census_detects_lost_agents(self, small_population: list[Agent]) -> None:
        """Test a Closed world whose size changed fails the census."""
        world = create_world(small_population)
        world.agents.pop()
        with pytest.raises(SimulationError, match="expected 200"):
            census(world, 0)

    def test_immunized_world_is_fixed_point(self, small_population: list[Agent]) -> None:
        """Test a fully immunized world never changes state."""
        world = create_world(small_population, initial_infected=0)
        for agent in world.agents:
            agent.state = M
        for record in run(world, 10):
            assert record.counts[M] == 200
            assert record.new_infections == 0

    def test_initial_infected_on_day_zero(self, small_population: list[Agent]) -> None:
        """Test the day-0 census holds the seeded cases."""
        world = create_world(small_population, seed=5, landscape_side=500.0)
        (record,) = run(world, 1)
        assert record.day == 0
        assert record.infected >= 3

    def test_deterministic(self, small_population: list[Agent]) -> None:
        """Test equal seeds reproduce censuses and infection edges."""
        first = create_world(small_population, seed=8, landscape_side=500.0)
        second = create_world(small_population, seed=8, landscape_side=500.0)
        assert [c.as_row() for c in run(first, 25)] == [c.as_row() for c in run(second, 25)]
        assert first.infection_edges == second.infection_edges

    def test_zero_transmission(self, small_population: list[Agent]) -> None:
        """Test p_transmit 0 keeps the cumulative count at the seeded cases."""
        world = create_world(
            small_population, DiseaseParams(p_transmit=0.0), seed=3, landscape_side=500.0
        )
        records = run(world, 25)
        assert all(r.cumulative_infected == 3 for r in records)
        assert not world.infection_edges
        assert records[-1].infected == 0

    def test_cumulative_monotone(self, small_population: list[Agent]) -> None:
        """Test cumulative infections never decrease."""
        world = create_world(
            small_population, DiseaseParams(p_transmit=0.8), seed=4, landscape_side=300.0
        )
        records = run(world, 30)
        cumulative = [r.cumulative_infected for r in records]
        assert cumulative == sorted(cumulative)
        assert cumulative[-1] <= 3 + sum(r.new_infections for r in records)

    def test_cumulative_counts_distinct_agents(self, small_population: list[Agent]) -> None:
        """Test reinfections never push the cumulative count past the population."""
        params = DiseaseParams(p_transmit=0.9, p_immunize=0.0, t_recover_max=5)
        world = create_world(small_population, params, seed=6, landscape_side=300.0)
        records = run(world, 60)
        assert records[-1].cumulative_infected <= 200
        assert records[-1].cumulative_infected == sum(a.ever_infected for a in world.agents)
        assert 3 + sum(r.new_infections for r in records) > records[-1].cumulative_infected

    def test_infection_edges(self, small_population: list[Agent]) -> None:
        """Test every edge links two distinct agents on a simulated day."""
        world = create_world(
            small_population, DiseaseParams(p_transmit=0.8), seed=4, landscape_side=300.0
        )
        run(world, 30)
        assert world.infection_edges
        for infector, infectee, day in world.infection_edges:
            assert infector != infectee
            assert 0 <= day < 30

    def test_day_counter(self, small_population: list[Agent]) -> None:
        """Test census days are consecutive and the world advances."""
        world = create_world(small_population)
        records = run(world, 5)
        assert [r.day for r in records] == [0, 1, 2, 3, 4]
        assert world.day == 5

    def test_rejects_non_positive_days(self, small_population: list[Agent]) -> None:
        """Test run refuses zero days."""
        with pytest.raises(ParameterError):
            run(create_world(small_population), 0)

    def test_census_row_columns(self, small_population: list[Agent]) -> None:
        """Test as_row follows the census column order."""
        _, record = step_day(create_world(small_population))
        assert tuple(record.as_row()) == CENSUS_COLUMNS


class TestOpenMode:
    """Test population growth in Open mode."""

    def test_public_slots_spawn_agents(self, small_population: list[Agent]) -> None:
        """Test public contacts create agents up to the cap."""
        engine = EngineParams(p_network=0.0, max_population=220)
        world = create_world(small_population, mode=Mode.OPEN, engine=engine, seed=1)
        _, record = step_day(world)
        assert len(world.agents) == 220
        assert record.population == 220
        assert [a.id for a in world.agents] == list(range(220))
        spawned = world.agents[200:]
        assert all(a.network_members() == set() for a in spawned)

    def test_growth_stops_at_cap(self, small_population: list[Agent]) -> None:
        """Test later days stay at the cap."""
        engine = EngineParams(max_population=210)
        world = create_world(small_population, mode=Mode.OPEN, engine=engine, seed=1)
        for record in run(world, 5):
            assert record.population <= 210
            assert sum(record.counts.values()) == record.population


class TestReporting:
    """Test estimate_R and social_type_breakdown."""

    def test_estimate_r(self) -> None:
        """Test the mean out-degree over completed cases."""
        edges = [(0, 1, 1), (0, 2, 1), (1, 3, 2)]
        assert estimate_R(edges, {0, 1}) == pytest.approx(1.5)
        assert estimate_R(edges, {2}) == 0.0
        assert estimate_R(edges, set()) is None

    def test_breakdown_shape(self, small_population: list[Agent]) -> None:
        """Test the breakdown has one row per social type and sums to n."""
        world = create_world(small_population, seed=1)
        run(world, 3)
        table = social_type_breakdown(world)
        assert table.shape == (12, 9)
        assert int(table.to_numpy().sum()) == 200
