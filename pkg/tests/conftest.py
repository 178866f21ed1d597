"""Pytest fixtures for tests."""

from pathlib import Path

import numpy as np
import pytest

from src.api.model import compile_model, load_model
from src.core.observables import Observable
from src.core.space import DiscreteSpace
from src.dynamics.markov import Generator, TransitionMatrix, poisson_birth_generator

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def die() -> DiscreteSpace:
    """Fair six-sided die with labels 1..6."""
    return DiscreteSpace.uniform([str(k) for k in range(1, 7)])


@pytest.fixture
def die_x(die) -> Observable:
    """X(k) = k on the die."""
    return Observable.from_labels(die)


@pytest.fixture
def coin() -> DiscreteSpace:
    """Biased coin, P(H) = 0.3."""
    return DiscreteSpace.from_measure({"H": 0.3, "T": 0.7})


@pytest.fixture
def skewed6() -> DiscreteSpace:
    """Six points with distinct, nonuniform weights."""
    weights = np.array([1.0, 2.0, 3.0, 5.0, 7.0, 11.0])
    return DiscreteSpace.from_weights(
        ["a", "b", "c", "d", "e", "f"], weights / weights.sum(), normalize=True
    )


@pytest.fixture
def dtmc2() -> TransitionMatrix:
    return TransitionMatrix(np.array([[0.5, 0.5], [0.25, 0.75]]))


@pytest.fixture
def ctmc2() -> Generator:
    """Two states with rates a = 1 (0 -> 1) and b = 2 (1 -> 0)."""
    return Generator(np.array([[-1.0, 1.0], [2.0, -2.0]]))


@pytest.fixture
def two_states() -> DiscreteSpace:
    """Both chains start in s0."""
    return DiscreteSpace.from_measure({"s0": 1.0, "s1": 0.0})


@pytest.fixture
def birth() -> Generator:
    """Unit-rate counting chain truncated at 40."""
    return poisson_birth_generator(1.0, 40)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def load_fixture():
    """Load and compile a shipped model fixture by stem."""

    def _load(stem: str, strict: bool = True):
        return compile_model(load_model(FIXTURES / f"{stem}.json", strict=strict), strict=strict)

    return _load


def random_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    """Dense row-stochastic matrix with every entry positive."""
    m = rng.uniform(0.05, 1.0, size=(n, n))
    m /= m.sum(axis=1, keepdims=True)
    # Rows must sum to 1 within 1e-12; push the residue onto the diagonal.
    m[np.arange(n), np.arange(n)] += 1.0 - m.sum(axis=1)
    return m


def random_generator(rng: np.random.Generator, n: int, low: float = 0.1, high: float = 1.0):
    """Dense Q-matrix with rates in [low, high]."""
    g = rng.uniform(low, high, size=(n, n))
    np.fill_diagonal(g, 0.0)
    np.fill_diagonal(g, -g.sum(axis=1))
    return g
