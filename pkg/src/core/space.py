"""Finite probability spaces, events, and the bracket/Bayes algebra."""

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.core.config import TOLERANCE
from src.core.errors import InvalidMeasure, UnknownLabel, ZeroConditioningEvent

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Event:
    """A set of sample point labels. Omega and the empty set are ordinary events."""

    members: frozenset[str] = frozenset()

    @classmethod
    def of(cls, *labels: str) -> "Event":
        return cls(frozenset(labels))

    def __and__(self, other: "Event") -> "Event":
        return Event(self.members & other.members)

    def __or__(self, other: "Event") -> "Event":
        return Event(self.members | other.members)

    def __contains__(self, label: object) -> bool:
        return label in self.members

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def issuperset(self, other: "Event") -> bool:
        return self.members >= other.members


@dataclass(frozen=True, eq=False)
class DiscreteSpace:
    """
    Ordered sample points with a normalized measure m(w).

    Weights are validated to sum to 1 within `tolerance` at construction.
    """

    labels: tuple[str, ...]
    weights: np.ndarray
    tolerance: float = field(default=TOLERANCE, repr=False)
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        if not labels:
            raise InvalidMeasure("A space needs at least one sample point")
        for label in labels:
            if not isinstance(label, str) or not label:
                raise InvalidMeasure(f"Sample point labels must be non-empty text: {label!r}")
        seen: set[str] = set()
        for label in labels:
            if label in seen:
                raise InvalidMeasure(f"Duplicate sample point label: {label!r}")
            seen.add(label)

        weights = np.array(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != len(labels):
            raise InvalidMeasure(
                f"Measure has {weights.shape[0]} weights for {len(labels)} points"
            )
        if not np.all(np.isfinite(weights)):
            raise InvalidMeasure("Measure weights must be finite")
        if np.any(weights < 0):
            bad = labels[int(np.argmin(weights))]
            raise InvalidMeasure(f"Negative weight for point {bad!r}")
        total = float(weights.sum())
        if abs(total - 1.0) > self.tolerance:
            raise InvalidMeasure(f"Measure sums to {total:.15g}, not 1")
        weights.setflags(write=False)

        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(labels)})

    @classmethod
    def from_weights(
        cls,
        labels: Sequence[str],
        weights: Iterable[float],
        normalize: bool = False,
        tolerance: float = TOLERANCE,
    ) -> "DiscreteSpace":
        """Build a space, optionally rescaling weights that only roughly sum to 1."""
        w = np.array(list(weights), dtype=float)
        if normalize:
            total = float(w.sum())
            if not np.isfinite(total) or total <= 0:
                raise InvalidMeasure(f"Cannot normalize a measure summing to {total:.15g}")
            if abs(total - 1.0) > tolerance:
                logger.warning("Rescaling measure that sums to %.15g", total)
            w = w / total
        return cls(tuple(labels), w, tolerance)

    @classmethod
    def from_measure(cls, measure: dict[str, float], normalize: bool = False) -> "DiscreteSpace":
        return cls.from_weights(list(measure), measure.values(), normalize=normalize)

    @classmethod
    def uniform(cls, labels: Sequence[str]) -> "DiscreteSpace":
        n = len(labels)
        return cls(tuple(labels), np.full(n, 1.0 / max(n, 1)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash((self.labels, self.weights.tobytes()))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def measure(self) -> dict[str, float]:
        return {label: float(w) for label, w in zip(self.labels, self.weights)}

    @property
    def omega(self) -> Event:
        return Event(frozenset(self.labels))

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownLabel(label) from None

    def weight(self, label: str) -> float:
        return float(self.weights[self.index(label)])

    def event(self, labels: Iterable[str]) -> Event:
        """Build an event, rejecting labels not in this space."""
        members = frozenset(labels)
        self._check(members)
        return Event(members)

    def mask(self, event: Event) -> np.ndarray:
        """Boolean indicator of `event` over the points, in point order."""
        self._check(event.members)
        return np.fromiter((label in event.members for label in self.labels), dtype=bool,
                           count=len(self.labels))

    def with_weights(self, weights: Iterable[float], normalize: bool = False) -> "DiscreteSpace":
        """The same points under a different measure."""
        return DiscreteSpace.from_weights(
            self.labels, weights, normalize=normalize, tolerance=self.tolerance
        )

    def _check(self, members: frozenset[str]) -> None:
        for label in sorted(members):
            if label not in self._index:
                raise UnknownLabel(label)


def event_prob(space: DiscreteSpace, event: Event) -> float:
    """P(E) = P(E|Omega), the sum of point weights in E."""
    return float(space.weights[space.mask(event)].sum())


def bracket(space: DiscreteSpace, a: Event, b: Event) -> float:
    """The p-bracket P(A|B) = P(A & B) / P(B)."""
    space.mask(a)
    p_b = event_prob(space, b)
    if p_b <= 0.0:
        raise ZeroConditioningEvent(f"Cannot condition on an event of probability {p_b:.15g}")
    p_ab = event_prob(space, a & b)
    return min(p_ab / p_b, 1.0)


def bayes(space: DiscreteSpace, a: Event, b: Event) -> float:
    """P(A|B) through Bayes' formula: P(B|A) P(A|Omega) / P(B|Omega)."""
    p_a = event_prob(space, a)
    p_b = event_prob(space, b)
    if p_a <= 0.0 or p_b <= 0.0:
        raise ZeroConditioningEvent("Bayes' formula needs P(A) > 0 and P(B) > 0")
    return bracket(space, b, a) * p_a / p_b


def point_basis(space: DiscreteSpace) -> list[Event]:
    """Elementary events {w_i} in point order."""
    return [Event(frozenset((label,))) for label in space.labels]


def completeness_residual(space: DiscreteSpace) -> float:
    """
    Max deviation from the p-basis relations.

    Checks sum_i |w_i)P(w_i| = I, P(w_i|w_j) = delta_ij and P(Omega|w_j) = 1
    for every basis point of positive measure.
    """
    elementary = point_basis(space)
    kets = [space.mask(e).astype(float) for e in elementary]
    unit = sum(np.outer(k, k) for k in kets)
    residual = float(np.max(np.abs(unit - np.eye(len(space)))))

    omega = space.omega
    for j, ej in enumerate(elementary):
        if space.weights[j] <= 0.0:
            continue
        residual = max(residual, abs(bracket(space, omega, ej) - 1.0))
        for i, ei in enumerate(elementary):
            expected = 1.0 if i == j else 0.0
            residual = max(residual, abs(bracket(space, ei, ej) - expected))
    return residual
