"""Random variables as diagonal operators, p-kets, p-bras and expectations."""

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.core.config import TOLERANCE
from src.core.errors import (
    DimensionMismatch,
    EvaluationError,
    IncompleteObservable,
    InvalidMeasure,
    PBNError,
    UnknownLabel,
    ZeroConditioningEvent,
)
from src.core.space import DiscreteSpace, Event, event_prob

RealFunction = Callable[[float], float]


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Observable:
    """X(w_i) = x_i, a total map from the points of one space to the reals."""

    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape[0] != len(self.labels):
            raise DimensionMismatch(
                f"{self.values.shape[0]} values for {len(self.labels)} points"
            )

    @classmethod
    def over(cls, space: DiscreteSpace, values: Mapping[str, float]) -> "Observable":
        """Build an observable, requiring a value for every point and no others."""
        for label in values:
            space.index(label)
        missing = [label for label in space.labels if label not in values]
        if missing:
            raise IncompleteObservable(f"No value for points: {', '.join(missing)}")
        return cls(space.labels, [float(values[label]) for label in space.labels])

    @classmethod
    def from_labels(cls, space: DiscreteSpace) -> "Observable":
        """X(w) = w for spaces whose labels are numbers."""
        try:
            return cls(space.labels, [float(label) for label in space.labels])
        except ValueError as e:
            raise IncompleteObservable(f"Labels are not numeric: {e}") from e

    @classmethod
    def indicator(cls, space: DiscreteSpace, event: Event) -> "Observable":
        """I_B(w) = 1 if w in B else 0."""
        return cls(space.labels, space.mask(event).astype(float))

    @classmethod
    def constant(cls, space: DiscreteSpace, c: float) -> "Observable":
        return cls(space.labels, np.full(len(space), float(c)))

    def vector(self, space: DiscreteSpace) -> np.ndarray:
        """Values in the point order of `space`."""
        if self.labels != space.labels:
            if set(self.labels) != set(space.labels):
                raise DimensionMismatch("Observable is defined over a different space")
            order = [self.labels.index(label) for label in space.labels]
            return self.values[order]
        return self.values

    def value(self, label: str) -> float:
        try:
            return float(self.values[self.labels.index(label)])
        except ValueError:
            raise UnknownLabel(label) from None

    def __mul__(self, other: "Observable") -> "Observable":
        if other.labels != self.labels:
            raise DimensionMismatch("Observables over different points")
        return Observable(self.labels, self.values * other.values)

    def map(self, func: RealFunction) -> "Observable":
        """F(X), applied pointwise."""
        return Observable(self.labels, apply_function(func, self.values))


def apply_function(func: RealFunction, xs: np.ndarray) -> np.ndarray:
    """F(x_i) for every value; out-of-range or non-finite results are evaluation errors."""
    out = np.empty(len(xs), dtype=float)
    for i, x in enumerate(xs):
        try:
            y = float(func(float(x)))
        except PBNError:
            raise
        except (ArithmeticError, ValueError) as e:
            raise EvaluationError(f"Function failed at {float(x):.15g}: {e}") from e
        if not math.isfinite(y):
            raise EvaluationError(f"Function is not finite at {float(x):.15g}")
        out[i] = y
    return out


@dataclass(frozen=True, eq=False)
class PKet:
    """Right expansion |Omega) = sum_i m(w_i)|w_i) over the p-basis."""

    labels: tuple[str, ...]
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "coefficients", _frozen(self.coefficients))
        if self.coefficients.shape[0] != len(self.labels):
            raise DimensionMismatch(
                f"{self.coefficients.shape[0]} coefficients for {len(self.labels)} points"
            )

    def validate(self, tol: float = TOLERANCE) -> "PKet":
        """Require coefficients >= 0 summing to 1 within `tol`."""
        if np.any(self.coefficients < -tol):
            raise InvalidMeasure("p-ket has negative coefficients")
        total = float(self.coefficients.sum())
        if abs(total - 1.0) > tol:
            raise InvalidMeasure(f"p-ket coefficients sum to {total:.15g}, not 1")
        return self

    def __len__(self) -> int:
        return len(self.labels)


class BraMode(str, Enum):
    """How a p-bra weighs each basis element."""

    PLAIN = "plain"
    PELITI = "peliti"


@dataclass(frozen=True, eq=False)
class PBra:
    """Left expansion P(Omega| = sum_i w_i P(w_i|."""

    labels: tuple[str, ...]
    weights: np.ndarray
    mode: BraMode = BraMode.PLAIN

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "weights", _frozen(self.weights))
        if self.weights.shape[0] != len(self.labels):
            raise DimensionMismatch(
                f"{self.weights.shape[0]} weights for {len(self.labels)} points"
            )

    def contract(self, ket: PKet) -> float:
        """P(Omega|Omega) style contraction over the plain p-basis."""
        if ket.labels != self.labels:
            raise DimensionMismatch("Bra and ket are over different bases")
        return float(self.weights @ ket.coefficients)

    def sandwich(self, diagonal: np.ndarray, ket: PKet) -> float:
        """P(Omega|D|ket) for an operator D diagonal in the p-basis."""
        if ket.labels != self.labels or diagonal.shape[0] != len(self.labels):
            raise DimensionMismatch("Bra, operator and ket are over different bases")
        return float(self.weights @ (diagonal * ket.coefficients))


def system_ket(space: DiscreteSpace) -> PKet:
    """|Omega) with coefficients P(w_i|Omega) = m(w_i)."""
    return PKet(space.labels, space.weights)


def system_bra(space: DiscreteSpace) -> PBra:
    """P(Omega| = sum_i P(w_i|, all-ones weights."""
    return PBra(space.labels, np.ones(len(space)))


def expectation(space: DiscreteSpace, x: Observable) -> float:
    """E(X) = P(Omega|X|Omega) = sum_i x_i m(w_i)."""
    return float(x.vector(space) @ space.weights)


def expectation_fn(space: DiscreteSpace, func: RealFunction, x: Observable) -> float:
    """E(F(X)) = sum_i F(x_i) m(w_i)."""
    return float(apply_function(func, x.vector(space)) @ space.weights)


def conditional_distribution(space: DiscreteSpace, given: Event) -> np.ndarray:
    """P(w_i|H) for every basis point, i.e. P(w_i & H|Omega) / P(H|Omega)."""
    mask = space.mask(given)
    p_h = float(space.weights[mask].sum())
    if p_h <= 0.0:
        raise ZeroConditioningEvent(f"Cannot condition on an event of probability {p_h:.15g}")
    return np.where(mask, space.weights, 0.0) / p_h


def conditional_expectation(space: DiscreteSpace, x: Observable, given: Event) -> float:
    """E(X|H) = P(Omega|X|H) = sum_i x_i P(w_i|H)."""
    return float(x.vector(space) @ conditional_distribution(space, given))


def conditional_expectation_fn(
    space: DiscreteSpace, func: RealFunction, x: Observable, given: Event
) -> float:
    """E(F(X)|H) = sum_i F(x_i) P(w_i|H)."""
    return float(apply_function(func, x.vector(space)) @ conditional_distribution(space, given))


def expectation_indicator(space: DiscreteSpace, x: Observable, event: Event) -> float:
    """P(Omega|X I_B|Omega) = sum over w in B of X(w) m(w); zero for the empty event."""
    mask = space.mask(event)
    return float(np.where(mask, x.vector(space), 0.0) @ space.weights)


def indicator_residual(space: DiscreteSpace, x: Observable, event: Event) -> float:
    """|E[X I_B] - P(B) E[X|B]| for an event of positive probability."""
    lhs = expectation_indicator(space, x, event)
    rhs = event_prob(space, event) * conditional_expectation(space, x, event)
    return abs(lhs - rhs)
