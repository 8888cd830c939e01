"""Tests for the extended SIR disease model."""

import math
from collections.abc import Iterator

import numpy as np
import pytest
from pydantic import ValidationError

from flusim.core.disease import (
    ABSORBING_STATES,
    FRESH_CLOCK,
    STATE_ORDER,
    DiseaseClock,
    DiseaseParams,
    allowed_transitions,
    draw_course_length,
    infection_probability,
    is_infectious,
    step_state,
)
from flusim.core.rng import uniform_stream

S, C, E, I, Q, NQ, D, R, M = STATE_ORDER


def draws(*values: float) -> Iterator[float]:
    return iter(values)


def random_clock(rng: np.random.Generator) -> DiseaseClock:
    return DiseaseClock(
        days_in_state=int(rng.integers(0, 20)),
        course_length=int(rng.choice([0, *range(5, 15)])),
        days_since_onset=int(rng.integers(0, 16)),
        exposure_count=int(rng.integers(0, 6)),
    )


class TestDiseaseParams:
    """Test DiseaseParams defaults and validation."""

    def test_defaults(self) -> None:
        """Test defaults match the model's default parameter table."""
        params = DiseaseParams()
        assert params.latent_days == 2
        assert params.p_recover == 0.9
        assert params.p_dead == 0.14
        assert params.p_quarantine == 0.1
        assert params.p_immunize == 0.95
        assert (params.t_recover_min, params.t_recover_max) == (5, 14)
        assert params.p_transmit == 0.9

    def test_probability_out_of_range_rejected(self) -> None:
        """Test probabilities outside [0, 1] fail validation."""
        with pytest.raises(ValidationError):
            DiseaseParams(p_recover=1.2)

    def test_inverted_course_bounds_rejected(self) -> None:
        """Test t_recover_min above t_recover_max fails validation."""
        with pytest.raises(ValidationError, match="exceeds"):
            DiseaseParams(t_recover_min=10, t_recover_max=6)

    def test_nq_hazard_accumulates_to_p_dead(self) -> None:
        """Test the daily NQ death hazard compounds to p_dead over a mean course."""
        params = DiseaseParams()
        survive = (1 - params.nq_daily_death_hazard) ** params.mean_course_length
        assert 1 - survive == pytest.approx(params.p_dead)

    def test_with_quarantine_copies(self) -> None:
        """Test with_quarantine leaves the original untouched."""
        params = DiseaseParams()
        boosted = params.with_quarantine(0.55)
        assert boosted.p_quarantine == 0.55
        assert params.p_quarantine == 0.1


class TestTransitionTable:
    """Test the state chart edges."""

    def test_edges(self) -> None:
        """Test every state's outgoing edges."""
        assert allowed_transitions(S) == {C}
        assert allowed_transitions(C) == {E, S}
        assert allowed_transitions(E) == {I}
        assert allowed_transitions(I) == {Q, NQ}
        assert allowed_transitions(Q) == {R, D}
        assert allowed_transitions(NQ) == {Q, D}
        assert allowed_transitions(R) == {M, S}
        assert allowed_transitions(D) == frozenset()
        assert allowed_transitions(M) == frozenset()

    def test_infectious_classes(self) -> None:
        """Test only I and NQ transmit."""
        assert [s for s in STATE_ORDER if is_infectious(s)] == [I, NQ]

    def test_random_steps_follow_chart(self) -> None:
        """Test 10^5 random steps never leave the chart."""
        rng = np.random.default_rng(3)
        params = DiseaseParams()
        uniforms = uniform_stream(rng)
        for _ in range(100_000):
            state = STATE_ORDER[int(rng.integers(len(STATE_ORDER)))]
            new_state, _ = step_state(
                state, random_clock(rng), int(rng.integers(0, 5)), params, uniforms
            )
            assert new_state is state or new_state in allowed_transitions(state)

    def test_negative_contacts_rejected(self) -> None:
        """Test a negative contact count raises ValueError."""
        with pytest.raises(ValueError):
            step_state(S, FRESH_CLOCK, -1, DiseaseParams(), draws())


class TestSusceptibleAndContact:
    """Test S and C steps."""

    def test_susceptible_without_contacts_stays(self) -> None:
        """Test S with no infectious contacts stays S and draws nothing."""
        state, clock = step_state(S, FRESH_CLOCK, 0, DiseaseParams(), draws())
        assert state is S
        assert clock.days_in_state == 1

    def test_susceptible_with_contacts_enters_contact(self) -> None:
        """Test S with k > 0 moves to C recording k."""
        state, clock = step_state(S, FRESH_CLOCK, 3, DiseaseParams(), draws())
        assert state is C
        assert clock.exposure_count == 3

    def test_infection_probability(self) -> None:
        """Test the at-least-one-infection formula."""
        assert infection_probability(0, 0.35) == 0.0
        assert infection_probability(3, 0.35) == pytest.approx(1 - 0.65**3)
        assert infection_probability(1, 1.0) == 1.0

    def test_contact_infected_below_threshold(self) -> None:
        """Test C becomes E when the draw is under 1 - 0.65^3."""
        clock = FRESH_CLOCK.enter(exposure_count=3)
        state, _ = step_state(C, clock, 0, DiseaseParams(), draws(0.72))
        assert state is E

    def test_contact_without_new_exposure_returns_to_susceptible(self) -> None:
        """Test a failed draw with no contacts today sends C back to S."""
        clock = FRESH_CLOCK.enter(exposure_count=3)
        state, _ = step_state(C, clock, 0, DiseaseParams(), draws(0.73))
        assert state is S

    def test_contact_with_new_exposure_stays(self) -> None:
        """Test a failed draw with contacts today keeps C and updates the count."""
        clock = FRESH_CLOCK.enter(exposure_count=1)
        state, new_clock = step_state(C, clock, 2, DiseaseParams(), draws(0.99))
        assert state is C
        assert new_clock.exposure_count == 2

    def test_zero_transmission_never_infects(self) -> None:
        """Test p_transmit = 0 keeps C from ever reaching E."""
        params = DiseaseParams(p_transmit=0.0)
        clock = FRESH_CLOCK.enter(exposure_count=10)
        state, _ = step_state(C, clock, 10, params, draws(0.0))
        assert state is C


class TestCourse:
    """Test E, I, NQ, Q and R steps."""

    @pytest.mark.parametrize("latent", [0, 1, 2, 4])
    def test_exposed_delay_equals_latent_days(self, latent: int) -> None:
        """Test E lasts exactly max(latent_days, 1) steps."""
        params = DiseaseParams(latent_days=latent)
        rng = np.random.default_rng(latent)
        state, clock = E, FRESH_CLOCK
        steps = 0
        while state is E:
            state, clock = step_state(state, clock, 0, params, uniform_stream(rng))
            steps += 1
        assert state is I
        assert steps == max(latent, 1)
        assert 5 <= clock.course_length <= 14

    def test_infectious_splits_on_quarantine_draw(self) -> None:
        """Test I goes to Q under p_quarantine and NQ otherwise."""
        clock = FRESH_CLOCK.enter(course_length=7)
        assert step_state(I, clock, 0, DiseaseParams(), draws(0.05))[0] is Q
        assert step_state(I, clock, 0, DiseaseParams(), draws(0.5))[0] is NQ

    def test_not_quarantined_seeks_care_at_course_end(self) -> None:
        """Test NQ at course end moves to Q without consuming draws."""
        clock = DiseaseClock(course_length=5, days_since_onset=4)
        state, _ = step_state(NQ, clock, 0, DiseaseParams(), draws())
        assert state is Q

    def test_not_quarantined_may_die(self) -> None:
        """Test NQ dies when the hazard draw succeeds."""
        params = DiseaseParams()
        clock = DiseaseClock(course_length=10, days_since_onset=1)
        state, _ = step_state(NQ, clock, 0, params, draws(0.99, 0.0))
        assert state is D
        state, _ = step_state(NQ, clock, 0, params, draws(0.99, 0.99))
        assert state is NQ

    def test_quarantined_waits_for_course_end(self) -> None:
        """Test Q stays until the course completes."""
        clock = DiseaseClock(course_length=10, days_since_onset=3)
        state, new_clock = step_state(Q, clock, 0, DiseaseParams(), draws())
        assert state is Q
        assert new_clock.days_since_onset == 4

    def test_quarantined_recovery_rate(self) -> None:
        """Test Q -> R happens in 0.90 +- 0.01 of 10^5 completions."""
        rng = np.random.default_rng(7)
        params = DiseaseParams()
        uniforms = uniform_stream(rng)
        clock = DiseaseClock(course_length=5, days_since_onset=4)
        recovered = sum(
            step_state(Q, clock, 0, params, uniforms)[0] is R for _ in range(100_000)
        )
        assert abs(recovered / 100_000 - 0.90) < 0.01

    def test_recovered_immunity_decision(self) -> None:
        """Test R goes to M under p_immunize and back to S otherwise."""
        assert step_state(R, FRESH_CLOCK, 0, DiseaseParams(), draws(0.5))[0] is M
        assert step_state(R, FRESH_CLOCK, 0, DiseaseParams(), draws(0.96))[0] is S

    def test_absorbing_states(self) -> None:
        """Test D and M never change over 10^5 steps with contacts."""
        rng = np.random.default_rng(5)
        params = DiseaseParams(p_transmit=1.0)
        uniforms = uniform_stream(rng)
        for state in ABSORBING_STATES:
            for _ in range(50_000):
                assert step_state(state, FRESH_CLOCK, 3, params, uniforms)[0] is state


class TestCourseLength:
    """Test draw_course_length."""

    def test_bounds(self) -> None:
        """Test extreme draws hit both bounds."""
        params = DiseaseParams()
        assert draw_course_length(params, draws(0.0)) == 5
        assert draw_course_length(params, draws(0.999999)) == 14

    def test_uniform_over_range(self) -> None:
        """Test all ten lengths appear with roughly equal frequency."""
        rng = np.random.default_rng(1)
        params = DiseaseParams()
        uniforms = uniform_stream(rng)
        lengths = [draw_course_length(params, uniforms) for _ in range(20_000)]
        counts = np.bincount(lengths, minlength=15)[5:15]
        assert counts.min() > 0
        assert math.isclose(counts.mean(), 2000)
        assert counts.max() - counts.min() < 250
