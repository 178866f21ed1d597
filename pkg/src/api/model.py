"""Model files: the published JSON schema, loading, and compilation to engine objects."""

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.core.config import DEFAULT_CONFIG, MODEL_SCHEMA_VERSION, EngineConfig
from src.core.errors import (
    DimensionMismatch,
    InvalidGenerator,
    ModelIoError,
    ModelValidationError,
    NonStochasticMatrix,
    SchemaError,
)
from src.core.observables import Observable, RealFunction
from src.core.space import DiscreteSpace, Event
from src.dynamics.markov import Dynamics, Generator, TransitionMatrix
from src.lang.evaluator import BUILTIN_FUNCTIONS, EvalContext, TabulatedFunction

logger = logging.getLogger(__name__)


class ModelKind(str, Enum):
    """Whether and how a model evolves in time."""

    STATIC = "static"
    DTMC = "dtmc"
    CTMC = "ctmc"


class ModelFile(BaseModel):
    """One model file, as published in `model-schema-1`."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    version: Literal["model-schema-1"] = MODEL_SCHEMA_VERSION
    name: str = Field(min_length=1)
    kind: ModelKind = ModelKind.STATIC
    states: list[str] = Field(min_length=1)
    measure: dict[str, float] | None = None
    normalize: bool = False
    observables: dict[str, dict[str, float]] = Field(default_factory=dict)
    events: dict[str, list[str]] = Field(default_factory=dict)
    dynamics: list[list[float]] | None = None
    functions: dict[str, dict[str, float]] = Field(default_factory=dict)


def schema_json() -> str:
    """The published JSON schema of model files."""
    schema = ModelFile.model_json_schema()
    schema["$id"] = MODEL_SCHEMA_VERSION
    return json.dumps(schema, indent=2, sort_keys=True)


def _pointer(loc: tuple[Any, ...]) -> str:
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in loc]
    return "/" + "/".join(parts) if parts else ""


def _schema_error(e: ValidationError) -> SchemaError:
    first = e.errors()[0]
    return SchemaError(_pointer(tuple(first.get("loc", ()))), first.get("msg", "invalid"))


def parse_model(
    text: str | bytes, strict: bool = True, tolerance: float = DEFAULT_CONFIG.tolerance
) -> ModelFile:
    """Validate JSON text against the schema and the model invariants."""
    try:
        model = ModelFile.model_validate_json(text)
    except ValidationError as e:
        raise _schema_error(e) from None
    validate_model(model, strict=strict, tolerance=tolerance)
    return model


def load_model(
    path: str | Path, strict: bool = True, tolerance: float = DEFAULT_CONFIG.tolerance
) -> ModelFile:
    """
    Read and validate a model file.

    With strict=False the measure only needs non-negative weights with a
    positive total; `check` uses this to report a broken normalization
    rather than refuse the file.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ModelIoError(f"Cannot read model {str(path)!r}: {e}") from e
    model = parse_model(text, strict=strict, tolerance=tolerance)
    logger.debug("Loaded model %r (%s, %d states)", model.name, model.kind.value,
                 len(model.states))
    return model


def validate_model(
    model: ModelFile, strict: bool = True, tolerance: float = DEFAULT_CONFIG.tolerance
) -> None:
    """Referential integrity and numeric invariants, first failure wins."""
    states = model.states
    known = set(states)
    for i, label in enumerate(states):
        if not label:
            raise ModelValidationError(f"/states/{i}", "state labels must be non-empty")
        if label in states[:i]:
            raise ModelValidationError(f"/states/{i}", f"duplicate state {label!r}")

    if model.measure is not None:
        for label, w in model.measure.items():
            pointer = _pointer(("measure", label))
            if label not in known:
                raise ModelValidationError(pointer, f"unknown state {label!r}")
            if not math.isfinite(w) or w < 0:
                raise ModelValidationError(pointer, f"weight must be finite and >= 0, got {w!r}")
        total = math.fsum(model.measure.values())
        if total <= 0:
            raise ModelValidationError("/measure", "measure has no positive weight")
        if strict and not model.normalize and abs(total - 1.0) > tolerance:
            raise ModelValidationError("/measure", f"measure sums to {total:.15g}, not 1")

    names: dict[str, str] = {}
    for kind in ("events", "observables", "functions"):
        for name in getattr(model, kind):
            pointer = _pointer((kind, name))
            if name == "Omega" or not name.isidentifier() or not name.isascii():
                raise ModelValidationError(pointer, f"{name!r} is not a usable identifier")
            if name in names:
                raise ModelValidationError(
                    pointer, f"{name!r} is already declared in {names[name]}"
                )
            names[name] = kind

    for name, labels in model.events.items():
        for i, label in enumerate(labels):
            if label not in known:
                raise ModelValidationError(
                    _pointer(("events", name, i)), f"unknown state {label!r}"
                )

    for name, values in model.observables.items():
        for label, value in values.items():
            pointer = _pointer(("observables", name, label))
            if label not in known:
                raise ModelValidationError(pointer, f"unknown state {label!r}")
            if not math.isfinite(value):
                raise ModelValidationError(pointer, f"value must be finite, got {value!r}")
        missing = [label for label in states if label not in values]
        if missing:
            raise ModelValidationError(
                _pointer(("observables", name)), f"no value for states: {', '.join(missing)}"
            )

    for name, table in model.functions.items():
        if name in BUILTIN_FUNCTIONS:
            raise ModelValidationError(
                _pointer(("functions", name)), f"{name!r} shadows a built-in function"
            )
        for key, value in table.items():
            pointer = _pointer(("functions", name, key))
            try:
                x = float(key)
            except ValueError:
                raise ModelValidationError(pointer, f"{key!r} is not a number") from None
            if not math.isfinite(x) or not math.isfinite(value):
                raise ModelValidationError(pointer, "table entries must be finite")

    if model.kind is ModelKind.STATIC:
        if model.dynamics is not None:
            raise ModelValidationError("/dynamics", "static models take no dynamics")
        return
    if model.dynamics is None:
        raise ModelValidationError("/dynamics", f"{model.kind.value} models need dynamics")
    for i, row in enumerate(model.dynamics):
        if len(row) != len(states):
            raise ModelValidationError(
                f"/dynamics/{i}", f"row has {len(row)} entries for {len(states)} states"
            )
    if len(model.dynamics) != len(states):
        raise ModelValidationError(
            "/dynamics", f"{len(model.dynamics)} rows for {len(states)} states"
        )
    build_dynamics(model)


def build_dynamics(model: ModelFile) -> Dynamics | None:
    if model.dynamics is None:
        return None
    try:
        if model.kind is ModelKind.DTMC:
            return TransitionMatrix(np.array(model.dynamics, dtype=float))
        return Generator(np.array(model.dynamics, dtype=float))
    except (NonStochasticMatrix, InvalidGenerator, DimensionMismatch) as e:
        raise ModelValidationError("/dynamics", str(e)) from e


@dataclass(frozen=True, eq=False)
class CompiledModel:
    """A validated model turned into spaces, observables and dynamics."""

    name: str
    kind: ModelKind
    space: DiscreteSpace
    raw_weights: np.ndarray
    events: dict[str, Event] = field(default_factory=dict)
    observables: dict[str, Observable] = field(default_factory=dict)
    functions: dict[str, RealFunction] = field(default_factory=dict)
    dynamics: Dynamics | None = None
    config: EngineConfig = DEFAULT_CONFIG

    @property
    def context(self) -> EvalContext:
        return EvalContext(
            space=self.space,
            events=self.events,
            observables=self.observables,
            functions=self.functions,
            dynamics=self.dynamics,
            config=self.config,
        )


def compile_model(
    model: ModelFile, config: EngineConfig = DEFAULT_CONFIG, strict: bool = True
) -> CompiledModel:
    """
    Build engine objects from a validated model.

    A missing measure is uniform; states absent from it get weight 0.
    """
    if model.measure is None:
        raw = np.full(len(model.states), 1.0 / len(model.states))
    else:
        raw = np.array([model.measure.get(label, 0.0) for label in model.states], dtype=float)
    space = DiscreteSpace.from_weights(
        model.states, raw, normalize=model.normalize or not strict, tolerance=config.tolerance
    )
    raw.setflags(write=False)

    events = {name: space.event(labels) for name, labels in model.events.items()}
    observables = {
        name: Observable.over(space, values) for name, values in model.observables.items()
    }
    functions: dict[str, RealFunction] = {
        name: TabulatedFunction(name, {float(k): v for k, v in table.items()})
        for name, table in model.functions.items()
    }
    return CompiledModel(
        name=model.name,
        kind=model.kind,
        space=space,
        raw_weights=raw,
        events=events,
        observables=observables,
        functions=functions,
        dynamics=build_dynamics(model),
        config=config,
    )
