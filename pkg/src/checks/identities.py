"""
Identity suite run by `pbn check`.

Each identity yields one line with its max residual and threshold.
Identities that do not apply to a model (no dynamics, no observables,
a singular propagator, a non-counting chain) are reported as SKIP and
never fail the run.
"""

import itertools
import logging
import math
from collections.abc import Callable
from enum import Enum

import numpy as np
from pydantic import BaseModel

from src.api.model import CompiledModel
from src.core.composite import OccupationSpace, WeightedBasis, peliti_expectation
from src.core.config import EngineConfig
from src.core.errors import (
    CutoffTooSmall,
    FactorialOverflow,
    NotACountingChain,
    SingularPropagator,
)
from src.core.observables import (
    BraMode,
    expectation_fn,
    indicator_residual,
    system_bra,
    system_ket,
)
from src.core.space import (
    DiscreteSpace,
    Event,
    bayes,
    bracket,
    completeness_residual,
    event_prob,
    point_basis,
)
from src.dynamics.markov import (
    Generator,
    SystemKetAtT,
    TransitionMatrix,
    ctmc_evolve_row,
    dtmc_evolve_row,
    evolve,
    propagator,
)
from src.dynamics.pictures import (
    density_two_pictures,
    heisenberg_expectation,
    increment_stationarity_check,
    schrodinger_expectation,
    time_dependent_basis_residual,
    time_dependent_unit_check,
)

logger = logging.getLogger(__name__)

# Spaces up to this size get every event pair in the Bayes check.
EXHAUSTIVE_EVENT_POINTS = 6
# Largest space the completeness relation is checked on.
COMPLETENESS_POINTS = 64

DTMC_TIMES = (1.0, 2.0, 5.0)
CTMC_TIMES = (0.1, 1.0, 5.0)
# Inverting U(t) loses accuracy as t grows, so the pictures use earlier times.
DTMC_PICTURE_TIMES = (1.0, 2.0, 3.0)
CTMC_PICTURE_TIMES = (0.1, 0.5, 1.0)
DTMC_SEMIGROUP = ((1.0, 2.0), (2.0, 3.0))
CTMC_SEMIGROUP = ((0.5, 1.0), (1.0, 2.5))
INCREMENT_TIMES = ((1.0, 0.5), (0.5, 1.0))


class CheckStatus(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIP = "SKIP"


class CheckLine(BaseModel):
    """One identity's outcome."""

    name: str
    status: CheckStatus
    residual: float | None = None
    threshold: float | None = None
    note: str | None = None

    def render(self) -> str:
        if self.status is CheckStatus.SKIP:
            return f"SKIP {self.name:<26} {self.note or 'not applicable'}"
        return (
            f"{self.status.value} {self.name:<26} "
            f"max_residual={self.residual:.3e} tol={self.threshold:.0e}"
        )


class CheckReport(BaseModel):
    model: str
    lines: list[CheckLine]

    @property
    def passed(self) -> bool:
        return all(line.status is not CheckStatus.FAIL for line in self.lines)

    def render(self) -> str:
        return "".join(line.render() + "\n" for line in self.lines)


def _measure(name: str, residual: float, threshold: float) -> CheckLine:
    ok = math.isfinite(residual) and residual <= threshold
    status = CheckStatus.PASS if ok else CheckStatus.FAIL
    return CheckLine(name=name, status=status, residual=float(residual), threshold=threshold)


def _skip(name: str, note: str) -> CheckLine:
    return CheckLine(name=name, status=CheckStatus.SKIP, note=note)


def _candidate_events(model: CompiledModel) -> list[Event]:
    space = model.space
    if len(space) <= EXHAUSTIVE_EVENT_POINTS:
        labels = space.labels
        return [
            Event(frozenset(itertools.compress(labels, bits)))
            for bits in itertools.product((0, 1), repeat=len(labels))
        ]
    return [space.omega, *point_basis(space), *model.events.values()]


def _positive(space: DiscreteSpace, events: list[Event]) -> list[Event]:
    return [e for e in events if event_prob(space, e) > 0.0]


# Static identities


def check_normalization(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """sum_i m(w_i) = 1 on the measure as written in the file."""
    residual = abs(math.fsum(float(w) for w in model.raw_weights) - 1.0)
    return _measure("normalization", residual, config.tolerance)


def check_system_bracket(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """P(Omega|Omega) = 1 and P(Omega|B) = 1 for every B of positive measure."""
    space = model.space
    residual = abs(bracket(space, space.omega, space.omega) - 1.0)
    for b in _positive(space, _candidate_events(model)):
        residual = max(residual, abs(bracket(space, space.omega, b) - 1.0))
    return _measure("system-bracket", residual, config.tolerance)


def check_bayes(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """P(A|B) through the joint agrees with Bayes' formula."""
    space = model.space
    events = _positive(space, _candidate_events(model))
    residual = 0.0
    for a in events:
        for b in events:
            residual = max(residual, abs(bracket(space, a, b) - bayes(space, a, b)))
    return _measure("bracket-vs-bayes", residual, config.tolerance)


def check_completeness(model: CompiledModel, config: EngineConfig) -> CheckLine:
    if len(model.space) > COMPLETENESS_POINTS:
        return _skip("completeness", f"more than {COMPLETENESS_POINTS} points")
    return _measure("completeness", completeness_residual(model.space), config.tolerance)


def check_contraction(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """P(Omega| contracted with |Omega) is 1."""
    space = model.space
    residual = abs(system_bra(space).contract(system_ket(space)) - 1.0)
    return _measure("contraction", residual, config.tolerance)


def check_indicator(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """E[X I_B] = P(B) E[X|B] for every observable and event of positive measure."""
    if not model.observables:
        return _skip("indicator", "no observables declared")
    space = model.space
    events = _positive(space, _candidate_events(model))
    residual = 0.0
    for x in model.observables.values():
        for b in events:
            residual = max(residual, indicator_residual(space, x, b))
    return _measure("indicator", residual, config.tolerance)


def _occupation(space: DiscreteSpace) -> OccupationSpace | None:
    if space.labels != tuple(str(n) for n in range(len(space))):
        return None
    return OccupationSpace.single_site(list(space.weights), normalize=True)


def check_peliti(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """Peliti's weighted bra reproduces <1>, <n> and <n^2>."""
    occ = _occupation(model.space)
    if occ is None:
        return _skip("peliti-agreement", "states are not the occupation numbers 0..K")
    try:
        resolution = WeightedBasis(
            occ.cutoffs[0], BraMode.PELITI, config.factorial_cutoff
        ).resolution_residual()
        residual = resolution
        n = occ.number_operator(0)
        for func in (_one, _identity, _square):
            plain = expectation_fn(occ.space, func, n)
            weighted = peliti_expectation(occ, func, factorial_cutoff=config.factorial_cutoff)
            residual = max(residual, abs(plain - weighted))
    except FactorialOverflow as e:
        return _skip("peliti-agreement", str(e))
    return _measure("peliti-agreement", residual, config.tolerance)


def _one(_: float) -> float:
    return 1.0


def _identity(x: float) -> float:
    return x


def _square(x: float) -> float:
    return x * x


# Dynamic identities


def _times(model: CompiledModel) -> tuple[float, ...]:
    return DTMC_TIMES if isinstance(model.dynamics, TransitionMatrix) else CTMC_TIMES


def _picture_times(model: CompiledModel) -> tuple[float, ...]:
    if isinstance(model.dynamics, TransitionMatrix):
        return DTMC_PICTURE_TIMES
    return CTMC_PICTURE_TIMES


def check_duality(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """Row evolution u(0)P^t transposed equals ket evolution."""
    dynamics = model.dynamics
    space = model.space
    tol = config.uniformization_tolerance
    residual = 0.0
    for t in _times(model):
        if isinstance(dynamics, TransitionMatrix):
            row = dtmc_evolve_row(space.weights, dynamics, int(t))
        else:
            row = ctmc_evolve_row(space.weights, dynamics, t, tol)
        ket = evolve(SystemKetAtT.initial(space), dynamics, t, tol)
        residual = max(residual, float(np.max(np.abs(row - ket.coefficients))))
    return _measure("row-column-duality", residual, config.evolution_tolerance)


def check_conservation(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """Columns of U(t) sum to 1."""
    residual = 0.0
    for t in _times(model):
        u = propagator(model.dynamics, t, config.uniformization_tolerance)
        residual = max(residual, float(np.max(np.abs(u.matrix.sum(axis=0) - 1.0))))
    return _measure("conservation", residual, config.evolution_tolerance)


def check_semigroup(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """U(t + s) = U(t) U(s)."""
    pairs = DTMC_SEMIGROUP if isinstance(model.dynamics, TransitionMatrix) else CTMC_SEMIGROUP
    tol = config.uniformization_tolerance
    residual = 0.0
    for t, s in pairs:
        joint = propagator(model.dynamics, t + s, tol).matrix
        u_t = propagator(model.dynamics, t, tol).matrix
        split = u_t @ propagator(model.dynamics, s, tol).matrix
        residual = max(residual, float(np.max(np.abs(joint - split))))
    return _measure("semigroup", residual, config.semigroup_tolerance)


def check_pictures(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """Heisenberg and Schrodinger expectations and densities coincide."""
    space = model.space
    tol = config.uniformization_tolerance
    observables = list(model.observables.values())
    residual = 0.0
    try:
        for t in _picture_times(model):
            for x in observables:
                h = heisenberg_expectation(space, x, model.dynamics, t, tol)
                s = schrodinger_expectation(space, x, model.dynamics, t, tol)
                residual = max(residual, abs(h - s))
            for i in range(len(space)):
                comparison = density_two_pictures(space, model.dynamics, i, t, tol)
                residual = max(residual, comparison.residual)
    except SingularPropagator as e:
        return _skip("picture-equivalence", str(e))
    return _measure("picture-equivalence", residual, config.evolution_tolerance)


def check_unit_operator(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """sum_i U^-1|i)(i|U = I."""
    try:
        residual = max(
            time_dependent_unit_check(model.dynamics, t, config.uniformization_tolerance)
            for t in _picture_times(model)
        )
    except SingularPropagator as e:
        return _skip("unit-operator", str(e))
    return _measure("unit-operator", residual, config.semigroup_tolerance)


def check_time_dependent_basis(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """P(x,t|x',t) = delta and P(Omega|x,t) = 1."""
    try:
        residual = max(
            time_dependent_basis_residual(
                propagator(model.dynamics, t, config.uniformization_tolerance)
            )
            for t in _picture_times(model)
        )
    except SingularPropagator as e:
        return _skip("time-dependent-basis", str(e))
    return _measure("time-dependent-basis", residual, config.semigroup_tolerance)


def check_increments(model: CompiledModel, config: EngineConfig) -> CheckLine:
    """Counting-chain increments X(t+s) - X(s) are distributed as X(t)."""
    if not isinstance(model.dynamics, Generator):
        return _skip("increment-stationarity", "needs a continuous-time counting chain")
    try:
        residual = max(
            increment_stationarity_check(model.dynamics, t, s, config.uniformization_tolerance)
            for t, s in INCREMENT_TIMES
        )
    except (NotACountingChain, CutoffTooSmall) as e:
        return _skip("increment-stationarity", str(e))
    return _measure("increment-stationarity", residual, config.increment_tolerance)


STATIC_CHECKS: tuple[Callable[[CompiledModel, EngineConfig], CheckLine], ...] = (
    check_normalization,
    check_system_bracket,
    check_bayes,
    check_completeness,
    check_contraction,
    check_indicator,
    check_peliti,
)

DYNAMIC_CHECKS: tuple[Callable[[CompiledModel, EngineConfig], CheckLine], ...] = (
    check_duality,
    check_conservation,
    check_semigroup,
    check_pictures,
    check_unit_operator,
    check_time_dependent_basis,
    check_increments,
)

DYNAMIC_NAMES = (
    "row-column-duality",
    "conservation",
    "semigroup",
    "picture-equivalence",
    "unit-operator",
    "time-dependent-basis",
    "increment-stationarity",
)


def run_checks(model: CompiledModel, config: EngineConfig | None = None) -> CheckReport:
    """Run every applicable identity against a compiled model."""
    config = config or model.config
    lines = [check(model, config) for check in STATIC_CHECKS]
    if model.dynamics is None:
        lines.extend(_skip(name, "model has no dynamics") for name in DYNAMIC_NAMES)
    else:
        lines.extend(check(model, config) for check in DYNAMIC_CHECKS)
    failed = [line.name for line in lines if line.status is CheckStatus.FAIL]
    if failed:
        logger.warning("Model %r failed: %s", model.name, ", ".join(failed))
    return CheckReport(model=model.name, lines=lines)
