"""Tests for query evaluation against models."""

import itertools
import math

import pytest

from src.core.errors import (
    EvaluationError,
    NonIntegerTimeForDTMC,
    TimeTagWithoutDynamics,
    TypeMismatch,
    UnknownIdentifier,
    UnknownLabel,
    ZeroConditioningEvent,
)
from src.core.observables import Observable
from src.core.space import Event, bayes, event_prob
from src.lang.evaluator import EvalContext, TabulatedFunction, evaluate, evaluate_query
from src.lang.parser import Bracket, SetLiteral


@pytest.fixture
def die_ctx(die, die_x) -> EvalContext:
    return EvalContext(
        space=die,
        events={"Low": Event.of("1", "2", "3"), "Even": Event.of("2", "4", "6")},
        observables={"X": die_x},
    )


@pytest.fixture
def dtmc_ctx(two_states, dtmc2) -> EvalContext:
    return EvalContext(
        space=two_states,
        events={"Up": Event.of("s1")},
        observables={"X": Observable.over(two_states, {"s0": 0.0, "s1": 1.0})},
        dynamics=dtmc2,
    )


@pytest.fixture
def ctmc_ctx(two_states, ctmc2) -> EvalContext:
    return EvalContext(
        space=two_states,
        events={"Up": Event.of("s1")},
        observables={"X": Observable.over(two_states, {"s0": 0.0, "s1": 1.0})},
        dynamics=ctmc2,
    )


def test_die_bracket(die_ctx):
    """Test P({2}|{1,2,3}) = 1/3."""
    assert evaluate_query("P({2}|{1,2,3})", die_ctx) == pytest.approx(1 / 3, abs=1e-15)


def test_named_events(die_ctx):
    """Test P(Even|Low) = 1/3 and P(Even & Low|Omega) = 1/6."""
    assert evaluate_query("P(Even|Low)", die_ctx) == pytest.approx(1 / 3, abs=1e-15)
    assert evaluate_query("P(Even & Low|Omega)", die_ctx) == pytest.approx(1 / 6, abs=1e-15)


def test_system_bracket(die_ctx, dtmc_ctx):
    """Test P(Omega|Omega) = 1."""
    assert evaluate_query("P(Omega|Omega)", die_ctx) == 1.0
    assert evaluate_query("P(Omega|Omega@3)", dtmc_ctx) == pytest.approx(1.0, abs=1e-15)


def test_expectations(die_ctx):
    """Test E[X], E[sq(X)|Low] and the sandwich spelling."""
    assert evaluate_query("E[X]", die_ctx) == pytest.approx(3.5, abs=1e-12)
    assert evaluate_query("E[sq(X)|Low]", die_ctx) == pytest.approx(14 / 3, abs=1e-12)
    assert evaluate_query("P(Omega|X|Low)", die_ctx) == pytest.approx(2.0, abs=1e-12)
    assert evaluate_query("P(Omega|abs(X)|Omega)", die_ctx) == pytest.approx(3.5, abs=1e-12)


def test_dtmc_sandwich_at_time(dtmc_ctx):
    """Test P(Omega|X|Omega@2) = 0.625."""
    assert evaluate_query("P(Omega|X|Omega@2)", dtmc_ctx) == 0.625


def test_time_tag_applies_to_whole_query(dtmc_ctx):
    """Test that P(Up|Omega@1) reads the measure at t = 1."""
    assert evaluate_query("P(Up|Omega@1)", dtmc_ctx) == 0.5
    assert evaluate_query("P({s1}|Omega@2)", dtmc_ctx) == 0.625
    assert evaluate_query("E[X|Omega@2]", dtmc_ctx) == 0.625


def test_ctmc_time_tag(ctmc_ctx):
    """Test the expectation of the two-state CTMC at t = 0.5."""
    expected = (1.0 - math.exp(-1.5)) / 3
    assert evaluate_query("P(Omega|X|Omega@0.5)", ctmc_ctx) == pytest.approx(expected, abs=1e-10)


def test_untagged_omega_is_initial_measure(dtmc_ctx):
    """Test that Omega without a tag is |Omega_0)."""
    assert evaluate_query("P(Omega|X|Omega)", dtmc_ctx) == 0.0


def test_bracket_matches_bayes(skewed6):
    """Test evaluated brackets against Bayes' formula on all event pairs."""
    ctx = EvalContext(space=skewed6)
    events = [
        tuple(itertools.compress(skewed6.labels, bits))
        for bits in itertools.product((0, 1), repeat=6)
        if any(bits)
    ]
    for a in events[::5]:
        for b in events[::3]:
            value = evaluate(Bracket(SetLiteral(a), SetLiteral(b)), ctx)
            expected = bayes(skewed6, Event(frozenset(a)), Event(frozenset(b)))
            assert abs(value - expected) <= 1e-12
            assert 0.0 <= value <= 1.0


def test_evaluation_is_deterministic(ctmc_ctx):
    """Test that repeated evaluation is bit-identical."""
    first = evaluate_query("E[exp(X)|Omega@1.25]", ctmc_ctx)
    assert all(evaluate_query("E[exp(X)|Omega@1.25]", ctmc_ctx) == first for _ in range(5))


def test_unknown_identifiers(die_ctx):
    """Test that unbound names are reported by kind."""
    with pytest.raises(UnknownIdentifier) as info:
        evaluate_query("P(Odd|Omega)", die_ctx)
    assert info.value.name == "Odd"
    with pytest.raises(UnknownIdentifier):
        evaluate_query("E[Y]", die_ctx)
    with pytest.raises(UnknownIdentifier):
        evaluate_query("E[cube(X)]", die_ctx)


def test_unknown_label_in_set(die_ctx):
    """Test that set literals only name points of the space."""
    with pytest.raises(UnknownLabel):
        evaluate_query("P({7}|Omega)", die_ctx)


def test_type_mismatch(die_ctx):
    """Test events where observables are expected and the reverse."""
    with pytest.raises(TypeMismatch):
        evaluate_query("E[Low]", die_ctx)
    with pytest.raises(TypeMismatch):
        evaluate_query("P(X|Omega)", die_ctx)
    with pytest.raises(TypeMismatch):
        evaluate_query("E[X(X)]", die_ctx)


def test_time_tag_without_dynamics(die_ctx):
    """Test that static models refuse time tags."""
    with pytest.raises(TimeTagWithoutDynamics):
        evaluate_query("P(Low|Omega@1)", die_ctx)


def test_dtmc_needs_integer_tags(dtmc_ctx):
    """Test that DTMC models refuse fractional tags."""
    with pytest.raises(NonIntegerTimeForDTMC):
        evaluate_query("P(Omega|X|Omega@1.5)", dtmc_ctx)


def test_conflicting_time_tags(dtmc_ctx):
    """Test that one query cannot read two different times."""
    with pytest.raises(EvaluationError):
        evaluate_query("P(Omega@1|Omega@2)", dtmc_ctx)
    assert evaluate_query("P(Omega@2|Omega@2.0)", dtmc_ctx) == pytest.approx(1.0)


def test_zero_conditioning(dtmc_ctx):
    """Test that the initial measure gives Up probability zero."""
    with pytest.raises(ZeroConditioningEvent):
        evaluate_query("P(Omega|Up)", dtmc_ctx)


def test_tabulated_function(die, die_x):
    """Test a model-declared function given by a value table."""
    payout = TabulatedFunction("payout", {1.0: 0, 2.0: 0, 3.0: 0, 4.0: 1, 5.0: 1, 6.0: 10})
    ctx = EvalContext(space=die, observables={"X": die_x}, functions={"payout": payout})
    assert evaluate_query("E[payout(X)]", ctx) == pytest.approx(2.0, abs=1e-12)
    short = TabulatedFunction("short", {1.0: 0.0})
    ctx = EvalContext(space=die, observables={"X": die_x}, functions={"short": short})
    with pytest.raises(EvaluationError):
        evaluate_query("E[short(X)]", ctx)


def test_event_prob_at_time_sums_to_one(ctmc_ctx):
    """Test P({s0}|Omega@t) + P({s1}|Omega@t) = 1."""
    total = evaluate_query("P({s0}|Omega@0.3)", ctmc_ctx) + evaluate_query(
        "P({s1}|Omega@0.3)", ctmc_ctx
    )
    assert total == pytest.approx(1.0, abs=1e-12)
    assert event_prob(ctmc_ctx.space, Event.of("s0")) == 1.0


def test_overflowing_function_is_an_evaluation_error(die):
    """Test that exp of a large value fails as evaluation, not as a crash."""
    big = Observable(die.labels, [0.0, 1.0, 2.0, 3.0, 4.0, 1000.0])
    ctx = EvalContext(space=die, observables={"X": big})
    with pytest.raises(EvaluationError, match="1000"):
        evaluate_query("E[exp(X)]", ctx)
    small = EvalContext(space=die, observables={"X": Observable(die.labels, [0.0] * 6)})
    assert evaluate_query("E[exp(X)]", small) == pytest.approx(1.0, abs=1e-15)
