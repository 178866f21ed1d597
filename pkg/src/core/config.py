"""Engine tolerances, limits and version strings."""

from pydantic import BaseModel, ConfigDict, Field

TOLERANCE = 1e-12
EVOLUTION_TOLERANCE = 1e-10
SEMIGROUP_TOLERANCE = 1e-9
INCREMENT_TOLERANCE = 1e-8
QUADRATURE_TOLERANCE = 1e-10
QUADRATURE_PANELS = 64
UNIFORMIZATION_TOLERANCE = 1e-12
MAX_UNIFORMIZATION_TERMS = 10**6
STATIONARY_TOLERANCE = 1e-12
MAX_SWEEPS = 10**6
PRODUCT_CAP = 10**6
MAX_STATES = 4096
FACTORIAL_CUTOFF = 20

# Roundoff below this magnitude is clamped to zero on read.
CLAMP_TOLERANCE = 1e-12

GRAMMAR_VERSION = "pbn-1"
MODEL_SCHEMA_VERSION = "model-schema-1"


class EngineConfig(BaseModel):
    """Numeric knobs for one engine run."""

    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(default=TOLERANCE, gt=0)
    evolution_tolerance: float = Field(default=EVOLUTION_TOLERANCE, gt=0)
    semigroup_tolerance: float = Field(default=SEMIGROUP_TOLERANCE, gt=0)
    increment_tolerance: float = Field(default=INCREMENT_TOLERANCE, gt=0)
    quadrature_tolerance: float = Field(default=QUADRATURE_TOLERANCE, gt=0)
    quadrature_panels: int = Field(default=QUADRATURE_PANELS, ge=1)
    uniformization_tolerance: float = Field(default=UNIFORMIZATION_TOLERANCE, gt=0)
    max_uniformization_terms: int = Field(default=MAX_UNIFORMIZATION_TERMS, ge=1)
    stationary_tolerance: float = Field(default=STATIONARY_TOLERANCE, gt=0)
    max_sweeps: int = Field(default=MAX_SWEEPS, ge=1)
    product_cap: int = Field(default=PRODUCT_CAP, ge=1)
    max_states: int = Field(default=MAX_STATES, ge=1)
    factorial_cutoff: int = Field(default=FACTORIAL_CUTOFF, ge=0)

    def with_tolerance(self, tol: float) -> "EngineConfig":
        """Return a copy whose residual thresholds are all `tol`."""
        return self.model_copy(
            update={
                "tolerance": tol,
                "evolution_tolerance": tol,
                "semigroup_tolerance": tol,
                "increment_tolerance": tol,
            }
        )


DEFAULT_CONFIG = EngineConfig()
