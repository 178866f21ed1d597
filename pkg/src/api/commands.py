"""In-process command functions behind the `pbn` CLI."""

import csv
import io
import logging
import math

import numpy as np
from pydantic import BaseModel, model_validator

from src.api.model import CompiledModel
from src.core.config import EVOLUTION_TOLERANCE
from src.core.errors import InvalidTimeGrid, TimeTagWithoutDynamics
from src.core.observables import PKet
from src.dynamics.markov import (
    Generator,
    SystemKetAtT,
    TransitionMatrix,
    ctmc_evolve,
    dtmc_evolve_ket,
    stationary,
)
from src.lang.evaluator import evaluate_query

logger = logging.getLogger(__name__)

# Slack when counting grid points so that t_max = k * step keeps its last row.
GRID_SLACK = 1e-9


def format_number(x: float) -> str:
    """Fifteen significant digits, `.` separator, no negative zero."""
    x = float(x)
    if x == 0.0:
        x = 0.0
    return format(x, ".15g")


class TrajectoryRecord(BaseModel):
    """m(w_i, t) on a time grid, with an optional expectation column."""

    labels: list[str]
    times: list[float]
    probabilities: list[list[float]]
    observable: str | None = None
    expectations: list[float] | None = None

    @model_validator(mode="after")
    def _rows_are_distributions(self) -> "TrajectoryRecord":
        if len(self.probabilities) != len(self.times):
            raise ValueError("one probability row per time point")
        for t, row in zip(self.times, self.probabilities):
            if len(row) != len(self.labels):
                raise ValueError(f"row at t={t} has {len(row)} entries")
            if abs(math.fsum(row) - 1.0) > EVOLUTION_TOLERANCE:
                raise ValueError(f"row at t={t} sums to {math.fsum(row):.15g}")
        if (self.observable is None) != (self.expectations is None):
            raise ValueError("observable and expectations go together")
        return self

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        header = ["t", *(f"p:{label}" for label in self.labels)]
        if self.observable is not None:
            header.append(f"E:{self.observable}")
        writer.writerow(header)
        for k, (t, row) in enumerate(zip(self.times, self.probabilities)):
            cells = [format_number(t), *(format_number(p) for p in row)]
            if self.expectations is not None:
                cells.append(format_number(self.expectations[k]))
            writer.writerow(cells)
        return buffer.getvalue()


def run_eval(model: CompiledModel, query: str | bytes) -> float:
    """Parse and evaluate one query against the model."""
    return evaluate_query(query, model.context)


def time_grid(dynamics: TransitionMatrix | Generator, t_max: float, step: float) -> list[float]:
    """t_k = k * step for k = 0..floor(t_max / step)."""
    if not math.isfinite(step) or step <= 0:
        raise InvalidTimeGrid(f"step must be positive, got {step!r}")
    if not math.isfinite(t_max) or t_max < 0:
        raise InvalidTimeGrid(f"t-max must be non-negative, got {t_max!r}")
    if isinstance(dynamics, TransitionMatrix):
        if not float(step).is_integer() or not float(t_max).is_integer():
            raise InvalidTimeGrid("discrete-time models need an integer step and t-max")
    count = math.floor(t_max / step + GRID_SLACK)
    return [k * step for k in range(count + 1)]


def run_evolve(
    model: CompiledModel, t_max: float, step: float, observable: str | None = None
) -> TrajectoryRecord:
    """
    Evolve the initial measure over the grid 0, step, ..., t_max.

    Discrete-time rows are stepped one grid interval at a time; continuous
    rows are each evolved directly from t = 0.
    """
    dynamics = model.dynamics
    if dynamics is None:
        raise TimeTagWithoutDynamics(f"Model {model.name!r} declares no dynamics")
    x = model.context.observable(observable) if observable is not None else None
    times = time_grid(dynamics, t_max, step)
    tol = model.config.uniformization_tolerance

    initial = SystemKetAtT.initial(model.space)
    kets: list[SystemKetAtT] = []
    for t in times:
        if isinstance(dynamics, TransitionMatrix):
            ket = initial if not kets else dtmc_evolve_ket(kets[-1], dynamics, int(step))
        else:
            ket = ctmc_evolve(initial, dynamics, t, tol)
        kets.append(ket)
    logger.debug("Evolved %r over %d grid points", model.name, len(times))

    expectations = None
    if x is not None:
        values = x.vector(model.space)
        expectations = [float(values @ ket.coefficients) for ket in kets]
    return TrajectoryRecord(
        labels=list(model.space.labels),
        times=times,
        probabilities=[[float(p) for p in ket.coefficients] for ket in kets],
        observable=observable,
        expectations=expectations,
    )


def run_stationary(model: CompiledModel) -> PKet:
    """The stationary distribution of the model's chain."""
    if model.dynamics is None:
        raise TimeTagWithoutDynamics(f"Model {model.name!r} declares no dynamics")
    return stationary(
        model.dynamics,
        tol=model.config.stationary_tolerance,
        max_sweeps=model.config.max_sweeps,
        labels=model.space.labels,
    )


def stationary_csv(pi: PKet) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([f"p:{label}" for label in pi.labels])
    writer.writerow([format_number(p) for p in np.asarray(pi.coefficients)])
    return buffer.getvalue()
