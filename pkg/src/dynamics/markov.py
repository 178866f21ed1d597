"""
Homogeneous discrete- and continuous-time Markov chains.

Users supply the row-stochastic P (P_ij = P(j, t+1 | i, t)) and the
Q-matrix G (G_ij = rate i -> j). Column kets evolve under P^T and
L = G^T; this module is the single place where that transpose happens.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.core.config import (
    CLAMP_TOLERANCE,
    EVOLUTION_TOLERANCE,
    MAX_STATES,
    MAX_SWEEPS,
    MAX_UNIFORMIZATION_TERMS,
    STATIONARY_TOLERANCE,
    TOLERANCE,
    UNIFORMIZATION_TOLERANCE,
)
from src.core.errors import (
    DimensionMismatch,
    InvalidGenerator,
    InvalidMeasure,
    NoConvergence,
    NonIntegerTime,
    NonStochasticMatrix,
    Reducible,
    TruncationFailure,
)
from src.core.observables import Observable, PKet, RealFunction, apply_function
from src.core.space import DiscreteSpace

logger = logging.getLogger(__name__)

# Singular-matrix threshold for the one-step DTMC matrix.
DETERMINANT_FLOOR = 1e-12

# Largest Poisson mean per uniformization block; beyond it the time is split
# so that exp(-lambda t) stays representable.
MAX_POISSON_MEAN = 400.0


def _square(entries, what: str, max_states: int) -> np.ndarray:
    m = np.array(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"{what} must be a non-empty square matrix, got shape {m.shape}")
    if m.shape[0] > max_states:
        raise DimensionMismatch(f"{what} has {m.shape[0]} states, limit is {max_states}")
    if not np.all(np.isfinite(m)):
        raise DimensionMismatch(f"{what} has non-finite entries")
    return m


def _clamp(m: np.ndarray, tol: float = CLAMP_TOLERANCE) -> np.ndarray:
    """Zero out roundoff negatives; anything below -tol is left for callers to reject."""
    small = (m < 0) & (m >= -tol)
    if np.any(small):
        m = np.where(small, 0.0, m)
    return m


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic one-step matrix, row = source, column = destination."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        m = _clamp(_square(self.entries, "Transition matrix", MAX_STATES))
        if np.any(m < 0):
            i, j = np.argwhere(m < 0)[0]
            raise NonStochasticMatrix(f"entry ({i}, {j}) is negative: {m[i, j]:.15g}")
        sums = m.sum(axis=1)
        for i, s in enumerate(sums):
            if abs(s - 1.0) > TOLERANCE:
                raise NonStochasticMatrix(f"row {i} sums to {s:.15g}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class Generator:
    """Q-matrix: G_ij >= 0 is the rate i -> j (1/time), rows sum to 0."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        g = _square(self.entries, "Generator", MAX_STATES)
        off = g - np.diag(np.diag(g))
        if np.any(off < 0):
            i, j = np.argwhere(off < 0)[0]
            raise InvalidGenerator(f"rate ({i}, {j}) is negative: {g[i, j]:.15g}")
        sums = g.sum(axis=1)
        for i, s in enumerate(sums):
            if abs(s) > TOLERANCE:
                raise InvalidGenerator(f"row {i} sums to {s:.15g}, not 0")
        g.setflags(write=False)
        object.__setattr__(self, "entries", g)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def master_operator(self) -> np.ndarray:
        """L = G^T, acting on column kets."""
        return self.entries.T


Dynamics = TransitionMatrix | Generator


class PropagatorOrigin(str, Enum):
    DTMC_POWER = "dtmc-power"
    CTMC_UNIFORMIZATION = "ctmc-uniformization"


@dataclass(frozen=True, eq=False)
class Propagator:
    """U(t) acting on column kets; columns sum to 1."""

    matrix: np.ndarray
    origin: PropagatorOrigin
    time: float
    invertible: bool = True

    def __post_init__(self) -> None:
        u = _clamp(np.array(self.matrix, dtype=float))
        if np.any(u < 0):
            raise InvalidMeasure(f"Propagator has a negative entry {u.min():.3g}")
        col = u.sum(axis=0)
        if np.max(np.abs(col - 1.0)) > EVOLUTION_TOLERANCE:
            raise InvalidMeasure(
                f"Propagator columns drift from 1 by {np.max(np.abs(col - 1.0)):.3g}"
            )
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, coefficients: np.ndarray) -> np.ndarray:
        if coefficients.shape[0] != self.n:
            raise DimensionMismatch(f"{coefficients.shape[0]}-vector against {self.n} states")
        return self.matrix @ coefficients


@dataclass(frozen=True, eq=False)
class SystemKetAtT:
    """|Omega_t) = sum_i m(w_i, t)|i) at time t."""

    ket: PKet
    time: float

    def __post_init__(self) -> None:
        coeffs = _clamp(np.array(self.ket.coefficients, dtype=float))
        ket = PKet(self.ket.labels, coeffs).validate(EVOLUTION_TOLERANCE)
        object.__setattr__(self, "ket", ket)

    @classmethod
    def initial(cls, space: DiscreteSpace) -> "SystemKetAtT":
        return cls(PKet(space.labels, space.weights), 0.0)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.ket.labels

    @property
    def coefficients(self) -> np.ndarray:
        return self.ket.coefficients

    def as_space(self) -> DiscreteSpace:
        """The evolved measure as a space over the same points."""
        return DiscreteSpace.from_weights(self.labels, self.coefficients, normalize=True)


def _integer_time(t: float) -> int:
    if isinstance(t, bool) or t < 0 or not float(t).is_integer():
        raise NonIntegerTime(f"Discrete-time chains need a non-negative integer time, got {t!r}")
    return int(t)


def _distribution(u0, n: int) -> np.ndarray:
    u = np.array(u0, dtype=float).reshape(-1)
    if u.shape[0] != n:
        raise DimensionMismatch(f"{u.shape[0]}-vector against {n} states")
    PKet(tuple(str(i) for i in range(n)), u).validate(TOLERANCE)
    return u


def dtmc_evolve_row(u0, p: TransitionMatrix, t: int) -> np.ndarray:
    """u(t) = u(0) P^t by repeated right-multiplication."""
    steps = _integer_time(t)
    u = _distribution(u0, p.n)
    for _ in range(steps):
        u = u @ p.entries
    return u


def dtmc_evolve_ket(k0: SystemKetAtT, p: TransitionMatrix, t: int) -> SystemKetAtT:
    """|Omega_t) = (P^T)^t |Omega_0)."""
    steps = _integer_time(t)
    if len(k0.labels) != p.n:
        raise DimensionMismatch(f"{len(k0.labels)}-state ket against {p.n} states")
    column = k0.coefficients
    pt = p.entries.T
    for _ in range(steps):
        column = pt @ column
    return SystemKetAtT(PKet(k0.labels, column), k0.time + steps)


def dtmc_propagator(p: TransitionMatrix, t: int) -> Propagator:
    """U(t) = (P^T)^t."""
    steps = _integer_time(t)
    u = np.linalg.matrix_power(p.entries.T, steps)
    invertible = steps == 0 or abs(float(np.linalg.det(p.entries))) > DETERMINANT_FLOOR
    return Propagator(u, PropagatorOrigin.DTMC_POWER, float(steps), invertible)


def ctmc_propagator(
    g: Generator,
    t: float,
    tol: float = UNIFORMIZATION_TOLERANCE,
    max_terms: int = MAX_UNIFORMIZATION_TERMS,
) -> Propagator:
    """
    U(t) = exp(L t), L = G^T, by uniformization.

    With lam = max_i |G_ii| and Q = I + G/lam (row-stochastic),
    exp(L t) = sum_k e^{-lam t} (lam t)^k / k! (Q^T)^k, truncated once the
    remaining Poisson mass is below `tol`.
    """
    if t < 0 or not math.isfinite(t):
        raise ValueError(f"Time must be finite and non-negative, got {t!r}")
    n = g.n
    lam = float(np.max(np.abs(np.diag(g.entries))))
    if t == 0 or lam == 0.0:
        return Propagator(np.eye(n), PropagatorOrigin.CTMC_UNIFORMIZATION, float(t))

    blocks = max(1, math.ceil(lam * t / MAX_POISSON_MEAN))
    dt = t / blocks
    qt = (np.eye(n) + g.entries / lam).T
    block = _uniformized_block(qt, lam * dt, tol / blocks, max_terms)
    u = block if blocks == 1 else np.linalg.matrix_power(block, blocks)
    return Propagator(u, PropagatorOrigin.CTMC_UNIFORMIZATION, float(t))


def _uniformized_block(qt: np.ndarray, mean: float, tol: float, max_terms: int) -> np.ndarray:
    weight = math.exp(-mean)
    term = np.eye(qt.shape[0])
    total = weight * term
    mass = weight
    k = 0
    while 1.0 - mass >= tol:
        k += 1
        if k > max_terms:
            raise TruncationFailure(
                f"Uniformization needed more than {max_terms} terms (Poisson mean {mean:.6g})"
            )
        weight *= mean / k
        if weight == 0.0 and k > mean:
            break
        term = qt @ term
        total += weight * term
        mass += weight
    logger.debug("Uniformization: mean %.6g, %d terms, tail %.3g", mean, k + 1, 1.0 - mass)
    return _clamp(total)


def ctmc_evolve(
    k0: SystemKetAtT, g: Generator, t: float, tol: float = UNIFORMIZATION_TOLERANCE
) -> SystemKetAtT:
    """|Omega_t) = exp(L t)|Omega_0)."""
    if len(k0.labels) != g.n:
        raise DimensionMismatch(f"{len(k0.labels)}-state ket against {g.n} states")
    u = ctmc_propagator(g, t, tol)
    return SystemKetAtT(PKet(k0.labels, u.apply(k0.coefficients)), k0.time + t)


def ctmc_evolve_row(
    u0,
    g: Generator,
    t: float,
    tol: float = UNIFORMIZATION_TOLERANCE,
    max_terms: int = MAX_UNIFORMIZATION_TERMS,
) -> np.ndarray:
    """u(t) = u(0) exp(G t), uniformized on the row vector without forming matrix powers."""
    if t < 0 or not math.isfinite(t):
        raise ValueError(f"Time must be finite and non-negative, got {t!r}")
    u = _distribution(u0, g.n)
    lam = float(np.max(np.abs(np.diag(g.entries))))
    if t == 0 or lam == 0.0:
        return u
    q = np.eye(g.n) + g.entries / lam
    blocks = max(1, math.ceil(lam * t / MAX_POISSON_MEAN))
    mean = lam * t / blocks
    for _ in range(blocks):
        weight = math.exp(-mean)
        term = u
        total = weight * term
        mass = weight
        k = 0
        while 1.0 - mass >= tol / blocks:
            k += 1
            if k > max_terms:
                raise TruncationFailure(
                    f"Uniformization needed more than {max_terms} terms (Poisson mean {mean:.6g})"
                )
            weight *= mean / k
            if weight == 0.0 and k > mean:
                break
            term = term @ q
            total = total + weight * term
            mass += weight
        u = total
    return _clamp(u)


def propagator(dynamics: Dynamics, t: float, tol: float = UNIFORMIZATION_TOLERANCE) -> Propagator:
    if isinstance(dynamics, TransitionMatrix):
        return dtmc_propagator(dynamics, t)
    return ctmc_propagator(dynamics, t, tol)


def evolve(
    k0: SystemKetAtT, dynamics: Dynamics, t: float, tol: float = UNIFORMIZATION_TOLERANCE
) -> SystemKetAtT:
    """Evolve a ket by t under either chain kind."""
    if isinstance(dynamics, TransitionMatrix):
        return dtmc_evolve_ket(k0, dynamics, t)
    return ctmc_evolve(k0, dynamics, t, tol)


def expectation_at_t(
    space: DiscreteSpace, func: RealFunction, x: Observable, ket_t: SystemKetAtT
) -> float:
    """<F(X)> = P(Omega|F(X)|Omega_t) = sum_i F(x_i) m(w_i, t)."""
    if ket_t.labels != space.labels:
        raise DimensionMismatch("Evolved ket is over a different basis than the space")
    return float(apply_function(func, x.vector(space)) @ ket_t.coefficients)


def _strongly_connected(adjacency: np.ndarray) -> bool:
    def reaches_all(adj: np.ndarray) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j in np.flatnonzero(adj[i]):
                if j not in seen:
                    seen.add(int(j))
                    queue.append(int(j))
        return len(seen) == adj.shape[0]

    return reaches_all(adjacency) and reaches_all(adjacency.T)


def stationary(
    dynamics: Dynamics,
    tol: float = STATIONARY_TOLERANCE,
    max_sweeps: int = MAX_SWEEPS,
    labels: tuple[str, ...] | None = None,
) -> PKet:
    """
    pi with pi P = pi (or pi G = 0), sum pi = 1.

    Generators are uniformized first. Iterates the lazy chain (I + P)/2,
    which has the same fixed point and no periodicity, from the uniform
    distribution until ||pi P - pi||_1 <= tol.
    """
    if isinstance(dynamics, TransitionMatrix):
        p = dynamics.entries
    else:
        lam = float(np.max(np.abs(np.diag(dynamics.entries))))
        p = np.eye(dynamics.n) if lam == 0.0 else np.eye(dynamics.n) + dynamics.entries / lam
    n = p.shape[0]
    labels = labels or tuple(str(i) for i in range(n))

    adjacency = (p > 0) & ~np.eye(n, dtype=bool)
    if n > 1 and not _strongly_connected(adjacency):
        raise Reducible("reducible chain: the stationary distribution is not unique")

    lazy = 0.5 * (np.eye(n) + p)
    pi = np.full(n, 1.0 / n)
    for sweep in range(1, max_sweeps + 1):
        nxt = pi @ lazy
        nxt /= nxt.sum()
        residual = float(np.abs(nxt @ p - nxt).sum())
        pi = nxt
        if residual <= tol:
            logger.debug("Stationary distribution after %d sweeps, residual %.3g", sweep, residual)
            return PKet(labels, pi)
    raise NoConvergence(f"Power iteration did not reach {tol:g} in {max_sweeps} sweeps")


def poisson_birth_generator(rate: float, cutoff: int) -> Generator:
    """Pure-birth counting chain on 0..cutoff with constant rate; the cutoff absorbs."""
    if rate <= 0:
        raise InvalidGenerator(f"Birth rate must be positive, got {rate!r}")
    if cutoff < 1:
        raise InvalidGenerator("A counting chain needs a cutoff of at least 1")
    g = np.zeros((cutoff + 1, cutoff + 1))
    for k in range(cutoff):
        g[k, k] = -rate
        g[k, k + 1] = rate
    return Generator(g)
