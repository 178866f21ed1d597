"""Exception hierarchy shared by every layer of the engine."""

from collections.abc import Iterable


class PBNError(Exception):
    """Base class for all engine errors."""


# Spaces, events and observables


class UnknownLabel(PBNError, ValueError):
    """An event or observable references a label absent from the space."""

    def __init__(self, label: str):
        super().__init__(f"Unknown sample point label: {label!r}")
        self.label = label


class InvalidMeasure(PBNError, ValueError):
    """A measure is negative, not finite, or does not sum to 1."""


class IncompleteObservable(PBNError, ValueError):
    """An observable leaves some sample point without a value."""


class ZeroConditioningEvent(PBNError, ValueError):
    """Conditioning on an event of probability zero."""


class NormalizationViolation(PBNError, ValueError):
    """A density does not integrate to 1 within tolerance."""


class DimensionMismatch(PBNError, ValueError):
    """Vectors or matrices over different bases were combined."""


# Composite spaces


class CapacityExceeded(PBNError, ValueError):
    """A product space would exceed the configured point cap."""


class IndexOutOfRange(PBNError, IndexError):
    """A site or factor index is outside the composite space."""


class UnsupportedBasis(PBNError, ValueError):
    """An operation needs an occupation basis it was not given."""


class FactorialOverflow(PBNError, ValueError):
    """A Peliti weight was requested beyond the exact factorial cutoff."""


# Markov dynamics


class NonStochasticMatrix(PBNError, ValueError):
    """A transition matrix has negative entries or rows not summing to 1."""


class InvalidGenerator(PBNError, ValueError):
    """A rate matrix has negative off-diagonal rates or nonzero row sums."""


class NonIntegerTime(PBNError, ValueError):
    """A discrete-time chain was asked for a non-integer or negative time."""


class TruncationFailure(PBNError, RuntimeError):
    """The uniformization series did not reach its tail tolerance."""


class Reducible(PBNError, ValueError):
    """The chain is not irreducible, so its stationary law is not unique."""


class NoConvergence(PBNError, RuntimeError):
    """Power iteration ran out of sweeps before reaching its residual."""


class SingularPropagator(PBNError, ValueError):
    """The propagator is not invertible; the Heisenberg picture is unavailable."""


class NotACountingChain(PBNError, ValueError):
    """The generator is not a pure-birth chain on 0..K."""


class CutoffTooSmall(PBNError, ValueError):
    """Too much probability reaches the truncation boundary."""


class InvalidTimeGrid(PBNError, ValueError):
    """A trajectory grid has a non-positive step or does not fit the chain kind."""


# Query language


class LexError(PBNError, ValueError):
    """Unrecognized input byte."""

    def __init__(self, position: int, message: str = "unrecognized input"):
        super().__init__(f"{message} at offset {position}")
        self.position = position
        self.message = message


class ParseError(PBNError, ValueError):
    """Token stream does not match the pbn-1 grammar."""

    def __init__(self, position: int, expected: Iterable[str], message: str | None = None):
        self.position = position
        self.expected = frozenset(expected)
        self.message = message or "expected " + " or ".join(sorted(self.expected))
        super().__init__(f"{self.message} at offset {position}")


class EvaluationError(PBNError, ValueError):
    """A well-formed query cannot be evaluated against the model."""


class UnknownIdentifier(EvaluationError):
    def __init__(self, name: str, kind: str = "identifier"):
        super().__init__(f"Unknown {kind}: {name!r}")
        self.name = name


class TypeMismatch(EvaluationError):
    pass


class TimeTagWithoutDynamics(EvaluationError):
    pass


class NonIntegerTimeForDTMC(EvaluationError):
    pass


# Model files


class ModelIoError(PBNError, OSError):
    """The model file could not be read."""


class SchemaError(PBNError, ValueError):
    """The model file does not match the published schema."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
        self.message = message


class ModelValidationError(PBNError, ValueError):
    """The model file is well-formed but violates a model invariant."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
        self.message = message
