"""Continuous random variables through their density f(x) = P(x|Omega)."""

import logging
import math
from dataclasses import dataclass

from src.core.config import QUADRATURE_PANELS, QUADRATURE_TOLERANCE
from src.core.errors import NormalizationViolation, ZeroConditioningEvent
from src.core.observables import RealFunction

logger = logging.getLogger(__name__)

MAX_DEPTH = 48


@dataclass(frozen=True)
class DensityModel:
    """
    A density on a bounded support [lower, upper].

    Unbounded densities must be truncated by the caller. The density
    callable must be re-entrant; it is called with one float at a time.
    """

    lower: float
    upper: float
    density: RealFunction
    panels: int = QUADRATURE_PANELS
    tolerance: float = QUADRATURE_TOLERANCE

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("Density support must be a bounded interval")
        if self.upper <= self.lower:
            raise ValueError(f"Empty support [{self.lower}, {self.upper}]")
        if self.panels < 1:
            raise ValueError("Quadrature needs at least one panel")

    def integrate(
        self, func: RealFunction, lo: float | None = None, hi: float | None = None
    ) -> float:
        """Integral of func(x) f(x) over [lo, hi] clipped to the support."""
        a = self.lower if lo is None else max(lo, self.lower)
        b = self.upper if hi is None else min(hi, self.upper)
        if b <= a:
            return 0.0

        def integrand(x: float) -> float:
            return float(func(x)) * float(self.density(x))

        return adaptive_simpson(integrand, a, b, self.tolerance, self.panels)


def adaptive_simpson(
    func: RealFunction,
    a: float,
    b: float,
    tol: float = QUADRATURE_TOLERANCE,
    panels: int = QUADRATURE_PANELS,
) -> float:
    """
    Composite adaptive Simpson quadrature.

    [a, b] is split into `panels` equal panels; each panel is refined
    recursively until the Richardson error estimate is within its share
    of `tol`.
    """
    width = (b - a) / panels
    panel_tol = tol / panels
    total = 0.0
    refinements = 0
    for k in range(panels):
        lo = a + k * width
        hi = b if k == panels - 1 else lo + width
        f_lo, f_mid, f_hi = func(lo), func(0.5 * (lo + hi)), func(hi)
        whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi)
        value, steps = _refine(func, lo, hi, f_lo, f_mid, f_hi, whole, panel_tol, MAX_DEPTH)
        total += value
        refinements += steps
    logger.debug("Simpson on [%g, %g]: %d panels, %d refinements", a, b, panels, refinements)
    return total


def _refine(func, a, b, fa, fm, fb, whole, tol, depth) -> tuple[float, int]:
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = func(lm), func(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0, 1
    lv, ls = _refine(func, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
    rv, rs = _refine(func, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    return lv + rv, ls + rs + 1


def _one(_: float) -> float:
    return 1.0


def _identity(x: float) -> float:
    return x


def normalization_residual(dm: DensityModel) -> float:
    """|integral of f - 1|."""
    return abs(dm.integrate(_one) - 1.0)


def _require_normalized(dm: DensityModel) -> None:
    residual = normalization_residual(dm)
    if residual > 100.0 * dm.tolerance:
        raise NormalizationViolation(f"Density integrates to 1 {residual:+.3g} off")


def density_expectation(dm: DensityModel, func: RealFunction) -> float:
    """E(F(X)) = integral of F(x) f(x) dx."""
    _require_normalized(dm)
    return dm.integrate(func)


def density_probability(dm: DensityModel, lo: float, hi: float) -> float:
    """P(H|Omega) for the interval H = [lo, hi]."""
    return dm.integrate(_one, lo, hi)


def density_conditional_expectation(dm: DensityModel, lo: float, hi: float) -> float:
    """E(X|H) = integral over H of x f(x) dx / integral over H of f(x) dx."""
    _require_normalized(dm)
    p_h = density_probability(dm, lo, hi)
    if p_h <= 0.0:
        raise ZeroConditioningEvent(f"Interval [{lo}, {hi}] has probability {p_h:.15g}")
    return dm.integrate(_identity, lo, hi) / p_h


def density_indicator_residual(dm: DensityModel, lo: float, hi: float) -> float:
    """|E[X I_H] - P(H) E[X|H]| on the interval H = [lo, hi]."""
    lhs = dm.integrate(_identity, lo, hi)
    rhs = density_probability(dm, lo, hi) * density_conditional_expectation(dm, lo, hi)
    return abs(lhs - rhs)
