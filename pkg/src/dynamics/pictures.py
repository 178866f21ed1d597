"""Heisenberg picture of observables and the two-picture identities."""

from dataclasses import dataclass

import numpy as np

from src.core.config import UNIFORMIZATION_TOLERANCE
from src.core.errors import CutoffTooSmall, DimensionMismatch, NotACountingChain, SingularPropagator
from src.core.observables import Observable
from src.core.space import DiscreteSpace
from src.dynamics.markov import (
    Dynamics,
    Generator,
    Propagator,
    SystemKetAtT,
    ctmc_propagator,
    evolve,
    expectation_at_t,
    propagator,
)

# Boundary mass allowed at the truncation cutoff of a counting chain.
BOUNDARY_MASS = 1e-10


def _identity(x: float) -> float:
    return x


def _require_invertible(u: Propagator) -> None:
    if not u.invertible:
        raise SingularPropagator(
            "The one-step matrix is singular; the Heisenberg picture is unavailable"
        )


def _inverse(u: Propagator) -> np.ndarray:
    _require_invertible(u)
    try:
        return np.linalg.inv(u.matrix)
    except np.linalg.LinAlgError as e:
        raise SingularPropagator(str(e)) from e


def heisenberg_observable(x: Observable, u: Propagator) -> np.ndarray:
    """X(t) = U^-1 X U."""
    _require_invertible(u)
    values = x.values
    if values.shape[0] != u.n:
        raise DimensionMismatch(f"{values.shape[0]}-point observable against {u.n} states")
    try:
        return np.linalg.solve(u.matrix, values[:, None] * u.matrix)
    except np.linalg.LinAlgError as e:
        raise SingularPropagator(str(e)) from e


def heisenberg_expectation(
    space: DiscreteSpace,
    x: Observable,
    dynamics: Dynamics,
    t: float,
    tol: float = UNIFORMIZATION_TOLERANCE,
) -> float:
    """P(Omega|X(t)|Omega) with |Omega) the initial measure of `space`."""
    u = propagator(dynamics, t, tol)
    xt = heisenberg_observable(Observable(space.labels, x.vector(space)), u)
    return float(np.ones(u.n) @ xt @ space.weights)


def schrodinger_expectation(
    space: DiscreteSpace,
    x: Observable,
    dynamics: Dynamics,
    t: float,
    tol: float = UNIFORMIZATION_TOLERANCE,
) -> float:
    """P(Omega|X|Omega_t), the same expectation with the ket evolved instead."""
    ket_t = evolve(SystemKetAtT.initial(space), dynamics, t, tol)
    return expectation_at_t(space, _identity, x, ket_t)


@dataclass(frozen=True)
class PictureComparison:
    """One quantity computed in both pictures."""

    schrodinger: float
    heisenberg: float

    @property
    def value(self) -> float:
        return self.schrodinger

    @property
    def residual(self) -> float:
        return abs(self.schrodinger - self.heisenberg)


@dataclass(frozen=True, eq=False)
class TimeDependentBasis:
    """|x,t) = U^-1 |x) as columns of `kets`; P(x,t| = P(x|U as rows of `bras`."""

    kets: np.ndarray
    bras: np.ndarray


def time_dependent_basis(u: Propagator) -> TimeDependentBasis:
    return TimeDependentBasis(_inverse(u), u.matrix.copy())


def time_dependent_basis_residual(u: Propagator) -> float:
    """Max deviation from P(x,t|x',t) = delta and P(Omega|x,t) = 1."""
    basis = time_dependent_basis(u)
    gram = basis.bras @ basis.kets
    residual = float(np.max(np.abs(gram - np.eye(u.n))))
    return max(residual, float(np.max(np.abs(basis.kets.sum(axis=0) - 1.0))))


def density_two_pictures(
    space: DiscreteSpace,
    dynamics: Dynamics,
    index: int,
    t: float,
    tol: float = UNIFORMIZATION_TOLERANCE,
) -> PictureComparison:
    """f(x, t) as P(x|Omega_t) and as P(x,t|Omega)."""
    if not 0 <= index < len(space):
        raise DimensionMismatch(f"State index {index} out of range 0..{len(space) - 1}")
    u = propagator(dynamics, t, tol)
    schrodinger = float(evolve(SystemKetAtT.initial(space), dynamics, t, tol).coefficients[index])
    bra = time_dependent_basis(u).bras[index]
    heisenberg = float(bra @ space.weights)
    return PictureComparison(schrodinger, heisenberg)


def time_dependent_unit_check(
    dynamics: Dynamics, t: float, tol: float = UNIFORMIZATION_TOLERANCE
) -> float:
    """Max-norm of sum_i U^-1|i)(i|U - I."""
    u = propagator(dynamics, t, tol)
    basis = time_dependent_basis(u)
    unit = sum(np.outer(basis.kets[:, i], basis.bras[i]) for i in range(u.n))
    return float(np.max(np.abs(unit - np.eye(u.n))))


def _require_counting_chain(g: Generator) -> None:
    entries = g.entries
    n = g.n
    for i in range(n):
        for j in range(n):
            if i != j and entries[i, j] != 0.0 and j != i + 1:
                raise NotACountingChain(
                    f"rate ({i}, {j}) is not a unit birth; counting chains only jump i -> i+1"
                )


def increment_stationarity_check(
    g: Generator,
    t: float,
    s: float,
    tol: float = UNIFORMIZATION_TOLERANCE,
    boundary_mass: float = BOUNDARY_MASS,
) -> float:
    """
    max_x |P(X_{t+s} - X_s = x) - f(x, t)| for a pure-birth chain from 0.

    The increment law is sum_y P(y at s) U(t)[y -> y+x]; f(x, t) is
    U(t)[0 -> x].
    """
    _require_counting_chain(g)
    n = g.n
    u_total = ctmc_propagator(g, t + s, tol)
    if u_total.matrix[n - 1, 0] >= boundary_mass:
        raise CutoffTooSmall(
            f"{u_total.matrix[n - 1, 0]:.3g} of the mass reaches the cutoff {n - 1} by t={t + s}"
        )
    u_t = ctmc_propagator(g, t, tol).matrix
    p_s = ctmc_propagator(g, s, tol).matrix[:, 0]

    deviation = 0.0
    for x in range(n):
        increment = sum(p_s[y] * u_t[y + x, y] for y in range(n - x))
        deviation = max(deviation, abs(increment - u_t[x, 0]))
    return float(deviation)
