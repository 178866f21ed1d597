"""Evaluate parsed pbn-1 queries against a model's space and dynamics."""

import logging
import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from src.core.config import DEFAULT_CONFIG, EngineConfig
from src.core.errors import (
    EvaluationError,
    NonIntegerTimeForDTMC,
    TimeTagWithoutDynamics,
    TypeMismatch,
    UnknownIdentifier,
)
from src.core.observables import (
    Observable,
    RealFunction,
    conditional_expectation_fn,
    expectation_fn,
)
from src.core.space import DiscreteSpace, Event, bracket
from src.dynamics.markov import (
    Dynamics,
    SystemKetAtT,
    TransitionMatrix,
    evolve,
    expectation_at_t,
)
from src.lang.parser import (
    Apply,
    AstNode,
    Bracket,
    EventExpr,
    Expect,
    Intersect,
    Name,
    ObservableName,
    Omega,
    OpExpr,
    Sandwich,
    SetLiteral,
    parse_query,
)

logger = logging.getLogger(__name__)


def _identity(x: float) -> float:
    return x


def _square(x: float) -> float:
    return x * x


BUILTIN_FUNCTIONS: Mapping[str, RealFunction] = MappingProxyType({
    "id": _identity,
    "sq": _square,
    "abs": abs,
    "exp": math.exp,
})


@dataclass(frozen=True)
class TabulatedFunction:
    """A model-declared function given by its values on the observable range."""

    name: str
    table: Mapping[float, float]

    def __call__(self, x: float) -> float:
        try:
            return float(self.table[float(x)])
        except KeyError:
            raise EvaluationError(f"Function {self.name!r} has no value at {x:.15g}") from None


@dataclass(frozen=True)
class EvalContext:
    """Immutable bindings a query is evaluated against."""

    space: DiscreteSpace
    events: Mapping[str, Event] = field(default_factory=dict)
    observables: Mapping[str, Observable] = field(default_factory=dict)
    functions: Mapping[str, RealFunction] = field(default_factory=dict)
    dynamics: Dynamics | None = None
    config: EngineConfig = DEFAULT_CONFIG

    def function(self, name: str) -> RealFunction:
        if name in self.functions:
            return self.functions[name]
        if name in BUILTIN_FUNCTIONS:
            return BUILTIN_FUNCTIONS[name]
        if name in self.events or name in self.observables:
            raise TypeMismatch(f"{name!r} is not a function")
        raise UnknownIdentifier(name, "function")

    def observable(self, name: str) -> Observable:
        if name in self.observables:
            return self.observables[name]
        if name in self.events:
            raise TypeMismatch(f"{name!r} is an event where an observable is expected")
        if name in self.functions or name in BUILTIN_FUNCTIONS:
            raise TypeMismatch(f"{name!r} is a function where an observable is expected")
        raise UnknownIdentifier(name, "observable")

    def event(self, name: str) -> Event:
        if name in self.events:
            return self.events[name]
        if name in self.observables:
            raise TypeMismatch(f"{name!r} is an observable where an event is expected")
        if name in self.functions or name in BUILTIN_FUNCTIONS:
            raise TypeMismatch(f"{name!r} is a function where an event is expected")
        raise UnknownIdentifier(name, "event")


def _event_nodes(node: EventExpr | None) -> Iterator[EventExpr]:
    if node is None:
        return
    if isinstance(node, Intersect):
        yield from _event_nodes(node.left)
        yield from _event_nodes(node.right)
    else:
        yield node


def _events_of(ast: AstNode) -> list[EventExpr]:
    if isinstance(ast, Expect):
        return list(_event_nodes(ast.given))
    return [*_event_nodes(ast.bra), *_event_nodes(ast.ket)]


def resolve(ast: AstNode, ctx: EvalContext) -> None:
    """Check that every free identifier is bound with the right kind."""
    for node in _events_of(ast):
        if isinstance(node, Name):
            ctx.event(node.ident)
        elif isinstance(node, SetLiteral):
            ctx.space.event(node.labels)
    op = ast.op if isinstance(ast, (Sandwich, Expect)) else None
    if isinstance(op, Apply):
        ctx.function(op.func)
        ctx.observable(op.arg)
    elif isinstance(op, ObservableName):
        ctx.observable(op.name)


def query_time(ast: AstNode, ctx: EvalContext) -> float | None:
    """The single time tag of a query, validated against the model dynamics."""
    tags = {n.time_value for n in _events_of(ast) if isinstance(n, Omega) and n.time is not None}
    if not tags:
        return None
    if len(tags) > 1:
        raise EvaluationError(
            "Conflicting time tags: " + ", ".join(format(t, ".15g") for t in sorted(tags))
        )
    t = tags.pop()
    if ctx.dynamics is None:
        raise TimeTagWithoutDynamics(f"Omega@{t:.15g} needs a model with dynamics")
    if isinstance(ctx.dynamics, TransitionMatrix) and not float(t).is_integer():
        raise NonIntegerTimeForDTMC(f"Discrete-time models only accept integer tags, got {t:.15g}")
    return t


def _to_event(node: EventExpr, ctx: EvalContext) -> Event:
    if isinstance(node, Name):
        return ctx.event(node.ident)
    if isinstance(node, SetLiteral):
        return ctx.space.event(node.labels)
    if isinstance(node, Omega):
        return ctx.space.omega
    if isinstance(node, Intersect):
        return _to_event(node.left, ctx) & _to_event(node.right, ctx)
    raise TypeError(f"Not an event expression: {node!r}")


def _to_function(op: OpExpr, ctx: EvalContext) -> tuple[RealFunction, Observable]:
    if isinstance(op, Apply):
        return ctx.function(op.func), ctx.observable(op.arg)
    return _identity, ctx.observable(op.name)


def evaluate(ast: AstNode, ctx: EvalContext) -> float:
    """
    Evaluate a query to a real number.

    A time tag evolves the initial measure to that time and the whole
    query is read under the evolved measure.
    """
    resolve(ast, ctx)
    t = query_time(ast, ctx)
    space = ctx.space
    ket_t = None
    if t is not None:
        ket_t = evolve(
            SystemKetAtT.initial(space), ctx.dynamics, t, ctx.config.uniformization_tolerance
        )
        space = ket_t.as_space()
        logger.debug("Evaluating under the measure at t=%.15g", t)

    if isinstance(ast, Bracket):
        a = _to_event(ast.bra, ctx)
        return bracket(space, a, _to_event(ast.ket, ctx))

    if isinstance(ast, Sandwich):
        func, x = _to_function(ast.op, ctx)
        if isinstance(ast.ket, Omega):
            if ket_t is not None:
                return expectation_at_t(ctx.space, func, x, ket_t)
            return expectation_fn(space, func, x)
        return conditional_expectation_fn(space, func, x, _to_event(ast.ket, ctx))

    if isinstance(ast, Expect):
        func, x = _to_function(ast.op, ctx)
        if ast.given is None or isinstance(ast.given, Omega):
            if ket_t is not None:
                return expectation_at_t(ctx.space, func, x, ket_t)
            return expectation_fn(space, func, x)
        return conditional_expectation_fn(space, func, x, _to_event(ast.given, ctx))

    raise TypeError(f"Not a query: {ast!r}")


def evaluate_query(source: str | bytes, ctx: EvalContext) -> float:
    """Tokenize, parse and evaluate one query."""
    return evaluate(parse_query(source), ctx)
