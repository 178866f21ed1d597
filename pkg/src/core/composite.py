"""Product spaces, occupation-number bases, and Doi/Peliti weighted bras."""

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from src.core.config import FACTORIAL_CUTOFF, PRODUCT_CAP, TOLERANCE
from src.core.errors import (
    CapacityExceeded,
    FactorialOverflow,
    IndexOutOfRange,
    InvalidMeasure,
    UnsupportedBasis,
)
from src.core.observables import (
    BraMode,
    Observable,
    PBra,
    PKet,
    RealFunction,
    apply_function,
    expectation,
    system_bra,
    system_ket,
)
from src.core.space import DiscreteSpace, Event, bracket, event_prob

# Joint labels are the factor labels joined with this separator.
JOINT_SEP = ","


@dataclass(frozen=True, eq=False)
class ProductSpace:
    """Omega = Omega_1 x ... x Omega_n with the product measure."""

    factors: tuple[DiscreteSpace, ...]
    space: DiscreteSpace = field(init=False)
    tuples: tuple[tuple[str, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        factors = tuple(self.factors)
        for f in factors:
            for label in f.labels:
                if JOINT_SEP in label:
                    raise InvalidMeasure(
                        f"Factor label {label!r} contains the joint separator {JOINT_SEP!r}"
                    )
        tuples = tuple(itertools.product(*(f.labels for f in factors)))
        weights = reduce(np.multiply.outer, (f.weights for f in factors)).reshape(-1)
        joint = DiscreteSpace(tuple(JOINT_SEP.join(t) for t in tuples), weights)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "tuples", tuples)
        object.__setattr__(self, "space", joint)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(f) for f in self.factors)

    def label(self, labels: Sequence[str]) -> str:
        """Joint label of a tuple of factor labels."""
        if len(labels) != len(self.factors):
            raise IndexOutOfRange(f"Expected {len(self.factors)} factor labels, got {len(labels)}")
        for f, lbl in zip(self.factors, labels):
            f.index(lbl)
        return JOINT_SEP.join(labels)

    def _factor(self, i: int) -> DiscreteSpace:
        if not 0 <= i < len(self.factors):
            raise IndexOutOfRange(f"Factor index {i} out of range 0..{len(self.factors) - 1}")
        return self.factors[i]

    def cylinder(self, i: int, labels: Sequence[str]) -> Event:
        """Joint points whose i-th coordinate lies in `labels`."""
        wanted = self._factor(i).event(labels).members
        return Event(frozenset(
            JOINT_SEP.join(t) for t in self.tuples if t[i] in wanted
        ))

    def marginal(self, i: int) -> DiscreteSpace:
        """The measure of factor i recovered from the joint measure."""
        factor = self._factor(i)
        grid = self.space.weights.reshape(self.shape)
        axes = tuple(k for k in range(len(self.factors)) if k != i)
        return DiscreteSpace.from_weights(factor.labels, grid.sum(axis=axes), normalize=True)

    def permuted(self, order: Sequence[int]) -> "ProductSpace":
        """The same joint space with factors reordered."""
        if sorted(order) != list(range(len(self.factors))):
            raise IndexOutOfRange(f"{list(order)} is not a permutation of the factors")
        return ProductSpace(tuple(self.factors[k] for k in order))

    def permute_event(self, event: Event, order: Sequence[int]) -> Event:
        """Relabel a joint event for the factor order of `permuted(order)`."""
        members = set()
        for label in self.space.event(event.members).members:
            parts = label.split(JOINT_SEP)
            members.add(JOINT_SEP.join(parts[k] for k in order))
        return Event(frozenset(members))


def product(spaces: Sequence[DiscreteSpace], cap: int = PRODUCT_CAP) -> ProductSpace:
    """Cartesian product of factor spaces with m(w1..wn) = prod m_i(w_i)."""
    if not spaces:
        raise ValueError("A product needs at least one factor")
    size = math.prod(len(s) for s in spaces)
    if size > cap:
        raise CapacityExceeded(f"Product has {size} points, cap is {cap}")
    return ProductSpace(tuple(spaces))


def independence_check(
    ps: ProductSpace | DiscreteSpace, a: Event, b: Event, tol: float = TOLERANCE
) -> bool:
    """True iff P(A|B) equals P(A|Omega) within `tol`."""
    space = ps.space if isinstance(ps, ProductSpace) else ps
    return abs(bracket(space, a, b) - event_prob(space, a)) <= tol


@dataclass(frozen=True)
class OccupationState:
    """|n1..nk) in the occupation-number basis."""

    counts: tuple[int, ...]

    @property
    def label(self) -> str:
        return JOINT_SEP.join(str(n) for n in self.counts)


@dataclass(frozen=True, eq=False)
class OccupationSpace:
    """A measure over all occupation states within per-site cutoffs."""

    cutoffs: tuple[int, ...]
    states: tuple[OccupationState, ...]
    space: DiscreteSpace

    @classmethod
    def from_measure(
        cls,
        measure: Mapping[tuple[int, ...], float],
        cutoff: int | Sequence[int] | None = None,
        normalize: bool = False,
        cap: int = PRODUCT_CAP,
    ) -> "OccupationSpace":
        """
        Build the truncated basis and place `measure` on it.

        States absent from `measure` get weight 0. Without an explicit
        cutoff each site is truncated at the largest count it carries.
        """
        keys = [tuple(int(n) for n in k) for k in measure]
        if not keys:
            raise InvalidMeasure("Occupation measure is empty")
        sites = len(keys[0])
        if sites == 0 or any(len(k) != sites for k in keys):
            raise InvalidMeasure("Occupation states must all have the same number of sites")
        if cutoff is None:
            cutoffs = tuple(max(k[i] for k in keys) for i in range(sites))
        elif isinstance(cutoff, int):
            cutoffs = (cutoff,) * sites
        else:
            cutoffs = tuple(int(c) for c in cutoff)
        if len(cutoffs) != sites:
            raise InvalidMeasure(f"{len(cutoffs)} cutoffs for {sites} sites")
        for k in keys:
            if any(n < 0 or n > c for n, c in zip(k, cutoffs)):
                raise InvalidMeasure(f"State {k} is outside the cutoffs {cutoffs}")

        size = math.prod(c + 1 for c in cutoffs)
        if size > cap:
            raise CapacityExceeded(f"Occupation basis has {size} states, cap is {cap}")
        states = tuple(
            OccupationState(counts)
            for counts in itertools.product(*(range(c + 1) for c in cutoffs))
        )
        lookup = dict(zip(keys, measure.values()))
        weights = [float(lookup.get(s.counts, 0.0)) for s in states]
        space = DiscreteSpace.from_weights([s.label for s in states], weights, normalize=normalize)
        return cls(cutoffs, states, space)

    @classmethod
    def single_site(
        cls, probabilities: Sequence[float], normalize: bool = False
    ) -> "OccupationSpace":
        """One site with P(n) = probabilities[n], cutoff len - 1."""
        return cls.from_measure(
            {(n,): p for n, p in enumerate(probabilities)},
            cutoff=len(probabilities) - 1,
            normalize=normalize,
        )

    @property
    def sites(self) -> int:
        return len(self.cutoffs)

    def _check_site(self, site: int) -> None:
        if not 0 <= site < self.sites:
            raise IndexOutOfRange(f"Site {site} out of range 0..{self.sites - 1}")

    def number_operator(self, site: int) -> Observable:
        """N_i |n) = n_i |n)."""
        self._check_site(site)
        return Observable(self.space.labels, [s.counts[site] for s in self.states])

    def marginal(self, site: int) -> "OccupationSpace":
        """The single-site space P(k|Omega_i)."""
        self._check_site(site)
        weights = np.zeros(self.cutoffs[site] + 1)
        for state, w in zip(self.states, self.space.weights):
            weights[state.counts[site]] += w
        return OccupationSpace.single_site(list(weights), normalize=True)


def occupation_expectation(occ: OccupationSpace, site: int) -> float:
    """<N_i> = P(Omega|N_i|Omega) = sum over n of n_i m(n)."""
    return expectation(occ.space, occ.number_operator(site))


def doi_state_bra(space: DiscreteSpace | OccupationSpace | ProductSpace) -> PBra:
    """Doi's state function <s| = sum_n <n|; numerically the system p-bra."""
    if isinstance(space, (OccupationSpace, ProductSpace)):
        space = space.space
    return system_bra(space)


@dataclass(frozen=True)
class WeightedBasis:
    """
    Single-site occupation basis with its bra weights and Gram diagonal.

    Plain: <m|n> = delta_mn, weight 1. Peliti: <m|n> = n! delta_mn,
    weight 1/n!, so sum_n |n>(1/n!)<n| = I.
    """

    cutoff: int
    mode: BraMode = BraMode.PLAIN
    factorial_cutoff: int = FACTORIAL_CUTOFF

    def __post_init__(self) -> None:
        if self.cutoff < 0:
            raise ValueError("Cutoff must be non-negative")
        if self.mode is BraMode.PELITI and self.cutoff > self.factorial_cutoff:
            raise FactorialOverflow(
                f"Cutoff {self.cutoff} exceeds the exact factorial limit {self.factorial_cutoff}"
            )

    def gram(self) -> np.ndarray:
        if self.mode is BraMode.PLAIN:
            return np.ones(self.cutoff + 1)
        return np.array([float(math.factorial(n)) for n in range(self.cutoff + 1)])

    def weights(self) -> np.ndarray:
        if self.mode is BraMode.PLAIN:
            return np.ones(self.cutoff + 1)
        return np.array([1.0 / math.factorial(n) for n in range(self.cutoff + 1)])

    def resolution_residual(self) -> float:
        """Max deviation of sum_n |n> w_n <n| from the identity."""
        return float(np.max(np.abs(self.weights() * self.gram() - 1.0)))


def _single_site(occ: OccupationSpace | DiscreteSpace) -> OccupationSpace:
    if not isinstance(occ, OccupationSpace):
        raise UnsupportedBasis("The Peliti bra needs an occupation-number basis")
    if occ.sites != 1:
        raise UnsupportedBasis(f"The Peliti bra needs a single site, got {occ.sites}")
    return occ


def peliti_bra(
    occ: OccupationSpace | DiscreteSpace, factorial_cutoff: int = FACTORIAL_CUTOFF
) -> PBra:
    """Peliti's standard bra <| = sum_n (1/n!) <n|."""
    occ = _single_site(occ)
    basis = WeightedBasis(occ.cutoffs[0], BraMode.PELITI, factorial_cutoff)
    return PBra(occ.space.labels, basis.weights(), BraMode.PELITI)


def peliti_expectation(
    occ: OccupationSpace | DiscreteSpace,
    func: RealFunction,
    ket: PKet | None = None,
    factorial_cutoff: int = FACTORIAL_CUTOFF,
) -> float:
    """
    <|F|Psi> with |Psi> = sum_n m_n |n> and <m|n> = n! delta_mn.

    Equals the plain expectation sum_n F(n) m_n.
    """
    occ = _single_site(occ)
    bra = peliti_bra(occ, factorial_cutoff)
    basis = WeightedBasis(occ.cutoffs[0], BraMode.PELITI, factorial_cutoff)
    ket = ket or system_ket(occ.space)
    ns = occ.number_operator(0).values
    return float(np.sum(bra.weights * apply_function(func, ns) * ket.coefficients * basis.gram()))
