"""Tests for the Heisenberg picture and the two-picture identities."""

import numpy as np
import pytest

from src.core.errors import CutoffTooSmall, NotACountingChain, SingularPropagator
from src.core.observables import Observable
from src.core.space import DiscreteSpace
from src.dynamics.markov import (
    Generator,
    TransitionMatrix,
    dtmc_propagator,
    poisson_birth_generator,
    propagator,
)
from src.dynamics.pictures import (
    density_two_pictures,
    heisenberg_expectation,
    heisenberg_observable,
    increment_stationarity_check,
    schrodinger_expectation,
    time_dependent_basis,
    time_dependent_basis_residual,
    time_dependent_unit_check,
)
from tests.conftest import random_generator


@pytest.fixture
def x2(two_states) -> Observable:
    return Observable.over(two_states, {"s0": 0.0, "s1": 1.0})


@pytest.mark.parametrize("t", [1, 2, 3])
def test_pictures_agree_dtmc(dtmc2, two_states, x2, t):
    """Test Heisenberg and Schrodinger expectations on the two-state DTMC."""
    h = heisenberg_expectation(two_states, x2, dtmc2, t)
    s = schrodinger_expectation(two_states, x2, dtmc2, t)
    assert abs(h - s) <= 1e-10
    if t == 2:
        assert s == 0.625


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_pictures_agree_ctmc(ctmc2, two_states, x2, t):
    """Test Heisenberg and Schrodinger expectations on the two-state CTMC."""
    h = heisenberg_expectation(two_states, x2, ctmc2, t)
    s = schrodinger_expectation(two_states, x2, ctmc2, t)
    assert abs(h - s) <= 1e-10


def test_pictures_agree_random_chains(rng):
    """Test picture equivalence and the unit operator on 5 random invertible chains."""
    for _ in range(5):
        n = int(rng.integers(3, 5))
        g = Generator(random_generator(rng, n))
        weights = rng.uniform(0.1, 1.0, size=n)
        space = DiscreteSpace.from_weights(
            [f"s{i}" for i in range(n)], weights / weights.sum(), normalize=True
        )
        x = Observable(space.labels, rng.uniform(-2.0, 2.0, size=n))
        t = float(rng.uniform(0.1, 1.0))
        h = heisenberg_expectation(space, x, g, t)
        s = schrodinger_expectation(space, x, g, t)
        assert abs(h - s) <= 1e-10
        assert time_dependent_unit_check(g, t) <= 1e-9


def test_heisenberg_observable_at_zero(ctmc2):
    """Test X(0) = X."""
    x = Observable(("s0", "s1"), [2.0, 5.0])
    xt = heisenberg_observable(x, propagator(ctmc2, 0.0))
    assert np.allclose(xt, np.diag([2.0, 5.0]), atol=1e-15)


def test_heisenberg_observable_keeps_spectrum(ctmc2, dtmc2, rng):
    """Test that X(t) = U^-1 X U has the eigenvalues of X."""
    x = Observable(("s0", "s1"), [2.0, 5.0])
    for u in (propagator(ctmc2, 0.7), propagator(ctmc2, 3.0), propagator(dtmc2, 4)):
        eigs = np.sort(np.linalg.eigvals(heisenberg_observable(x, u)).real)
        assert np.allclose(eigs, [2.0, 5.0], atol=1e-9)
    g = Generator(random_generator(rng, 4))
    x4 = Observable(("a", "b", "c", "d"), [-1.0, 0.5, 2.0, 3.5])
    eigs = np.sort(np.linalg.eigvals(heisenberg_observable(x4, propagator(g, 0.4))).real)
    assert np.allclose(eigs, x4.values, atol=1e-9)


def test_singular_chain_at_time_zero():
    """Test that any chain has an identity propagator, hence a Heisenberg picture, at t = 0."""
    flat = TransitionMatrix(np.array([[0.5, 0.5], [0.5, 0.5]]))
    u = dtmc_propagator(flat, 0)
    assert u.invertible
    x = Observable(("a", "b"), [0.0, 1.0])
    assert np.allclose(heisenberg_observable(x, u), np.diag([0.0, 1.0]), atol=1e-15)


def test_singular_propagator():
    """Test that a rank-one DTMC has no Heisenberg picture."""
    flat = TransitionMatrix(np.array([[0.5, 0.5], [0.5, 0.5]]))
    space = DiscreteSpace.from_measure({"a": 1.0, "b": 0.0})
    x = Observable(space.labels, [0.0, 1.0])
    with pytest.raises(SingularPropagator):
        heisenberg_expectation(space, x, flat, 1)
    with pytest.raises(SingularPropagator):
        time_dependent_unit_check(flat, 1)


def test_unit_operator_two_state(dtmc2, ctmc2):
    """Test sum_i U^-1|i)(i|U = I on both fixtures."""
    assert time_dependent_unit_check(dtmc2, 3) <= 1e-9
    assert time_dependent_unit_check(ctmc2, 1.0) <= 1e-9


def test_time_dependent_basis(ctmc2):
    """Test P(x,t|x',t) = delta and P(Omega|x,t) = 1."""
    u = propagator(ctmc2, 0.7)
    basis = time_dependent_basis(u)
    assert np.allclose(basis.bras @ basis.kets, np.eye(2), atol=1e-12)
    assert time_dependent_basis_residual(u) <= 1e-9


@pytest.mark.parametrize("index", [0, 1])
def test_density_in_both_pictures(ctmc2, two_states, index):
    """Test f(x, t) = P(x|Omega_t) = P(x,t|Omega)."""
    comparison = density_two_pictures(two_states, ctmc2, index, 1.0)
    assert comparison.residual <= 1e-10
    expected = 2 / 3 + np.exp(-3.0) / 3
    assert comparison.value == pytest.approx(expected if index == 0 else 1 - expected, abs=1e-10)


@pytest.mark.parametrize("rate", [1.0, 2.0])
@pytest.mark.parametrize("t,s", [(1.0, 0.5), (0.5, 1.0)])
def test_increment_stationarity(rate, t, s):
    """Test that counting-chain increments are distributed as X(t)."""
    g = poisson_birth_generator(rate, 40)
    assert increment_stationarity_check(g, t, s) <= 1e-8


def test_increment_needs_counting_chain(ctmc2):
    """Test that only pure-birth chains are accepted."""
    with pytest.raises(NotACountingChain):
        increment_stationarity_check(ctmc2, 1.0, 0.5)


def test_increment_cutoff_too_small():
    """Test that a cutoff reached with visible probability is refused."""
    with pytest.raises(CutoffTooSmall):
        increment_stationarity_check(poisson_birth_generator(1.0, 3), 1.0, 1.0)
