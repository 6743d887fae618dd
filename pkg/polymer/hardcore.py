"""
Exact hard-core polymer sums on small tori.

With sources coupled as exp(sum_b A_b s_b), the partition function reads

    Z(A) = 1/2 sum_alpha tau_alpha (-2)^{M^2} cosh(beta J)^{2 M^2}
           prod_pairs cosh(beta lambda v / 2)^2
           int DPhi  F(A, E) sum_Gamma phi(Gamma) prod_{gamma in Gamma} zeta_G(gamma) e^{S(Phi)}

at multilinear order in A, where F = prod_b (1 + t A_b)(1 + (1 - t^2) A_b E_b)
collects the A dependence of cosh(beta J + A_b) and of the bond term of S.
The sum over hard-core collections is finite and never exponentiated.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from free_fermion.momentum import BOUNDARY_LABELS, tau
from free_fermion.partition import prefactor
from free_fermion.propagators import phi_action_matrix
from grassmann.algebra import GrassmannPolynomial
from grassmann.wick import gaussian_integral
from lattice.model import BondIndex, ModelSpec, interacting_pairs
from polymer.activities import BondSet, Colorings, Polymer, PolymerArena, energy_monomial, format_bonds
from utils.exceptions import EnumerationLimitError, ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.polymer")

MAX_HARDCORE_SIDE = 3

INVENTORY_HEADER = ["bonds", "size", "colorings", "zeta"]

Monomial = Tuple[BondSet, BondSet]


@dataclass
class BondPolynomial:
    """
    Multilinear polynomial in the commuting nilpotent bond variables E_b and A_b.

    Keys are (R, Y): the monomial prod_{b in R} E_b prod_{b in Y} A_b. Products
    drop any monomial with a repeated E_b or A_b.
    """

    terms: Dict[Monomial, float] = field(default_factory=dict)

    @classmethod
    def constant(cls, value: float = 1.0) -> "BondPolynomial":
        return cls({(frozenset(), frozenset()): value})

    @property
    def constant_term(self) -> float:
        return self.terms.get((frozenset(), frozenset()), 0.0)

    def __add__(self, other: "BondPolynomial") -> "BondPolynomial":
        out = dict(self.terms)
        for key, value in other.terms.items():
            out[key] = out.get(key, 0.0) + value
        return BondPolynomial(out)

    def __mul__(self, other: "BondPolynomial") -> "BondPolynomial":
        out: Dict[Monomial, float] = {}
        for (r1, y1), c1 in self.terms.items():
            for (r2, y2), c2 in other.terms.items():
                if r1 & r2 or y1 & y2:
                    continue
                key = (r1 | r2, y1 | y2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return BondPolynomial(out)

    def scale(self, factor: float) -> "BondPolynomial":
        return BondPolynomial({k: v * factor for k, v in self.terms.items()})

    def source_coefficient(self, Y: Iterable[BondIndex]) -> Dict[BondSet, float]:
        """The E-polynomial multiplying prod_{b in Y} A_b."""
        Y = frozenset(Y)
        return {R: c for (R, y), c in self.terms.items() if y == Y}


def bond_factor(bond: BondIndex, t: float, with_source: bool) -> BondPolynomial:
    """t + (1 - t^2) E_b, linearised in A_b when the bond carries a source."""
    E = frozenset([bond])
    terms = {(frozenset(), frozenset()): t, (E, frozenset()): 1.0 - t * t}
    if with_source:
        terms[(frozenset(), E)] = 1.0 - t * t
        terms[(E, E)] = -2.0 * t * (1.0 - t * t)
    return BondPolynomial(terms)


def activity_polynomial(colorings: Colorings, t: float, sources: FrozenSet[BondIndex]) -> BondPolynomial:
    """sum_{R, Y} zeta(R, Y; gamma) prod E_b prod A_b, with Y restricted to the source bonds."""
    out = BondPolynomial()
    for black, weight in colorings.items():
        term = BondPolynomial.constant(weight)
        for b in sorted(black):
            term = term * bond_factor(b, t, b in sources)
        out = out + term
    return out


def free_source_factor(sources: Sequence[BondIndex], t: float) -> BondPolynomial:
    """prod_b (1 + t A_b)(1 + (1 - t^2) A_b E_b) at multilinear order."""
    out = BondPolynomial.constant(1.0)
    for b in sources:
        A = frozenset([b])
        out = out * BondPolynomial({(frozenset(), frozenset()): 1.0, (frozenset(), A): t, (A, A): 1.0 - t * t})
    return out


def _check_side(spec: ModelSpec) -> None:
    if spec.M > MAX_HARDCORE_SIDE:
        raise EnumerationLimitError(f"hard-core polymer sums limited to M <= {MAX_HARDCORE_SIDE}, got M = {spec.M}")


def hardcore_polymer_sum(spec: ModelSpec, multilinear: bool = False, sources: Sequence[BondIndex] = (),
                         arena: Optional[PolymerArena] = None) -> BondPolynomial:
    """
    sum_Gamma phi(Gamma) prod_gamma zeta_G(gamma) over pairwise bond-disjoint polymer collections.

    With multilinear set, the activities carry their A_b dependence on the
    given source bonds; otherwise the sum is taken at A = 0.
    """
    _check_side(spec)
    sources = frozenset(b.wrapped(spec.M) for b in sources)
    if sources and not multilinear:
        raise ValidationError("source bonds need the multilinear expansion")
    if spec.lam == 0.0 or not spec.v_table:
        return BondPolynomial.constant(1.0)
    if arena is None:
        arena = PolymerArena(spec)
    polymers = arena.all_polymers()
    activities = [activity_polynomial(arena.colorings(p), spec.t, sources) for p in polymers]
    logger.info(f"hard-core sum over {len(polymers)} polymers on the {spec.M}x{spec.M} torus")

    @lru_cache(maxsize=None)
    def collections(start: int, used: FrozenSet[BondIndex]) -> BondPolynomial:
        total = BondPolynomial.constant(1.0)
        for j in range(start, len(polymers)):
            if polymers[j].bonds & used:
                continue
            total = total + activities[j] * collections(j + 1, used | polymers[j].bonds)
        return total

    return collections(0, frozenset())


def to_grassmann(coefficients: Dict[BondSet, float], spec: ModelSpec, alpha) -> GrassmannPolynomial:
    """sum_R c_R prod_{b in R} E_b as a Grassmann polynomial, without pruning."""
    n = 4 * spec.M * spec.M
    out = GrassmannPolynomial.zero(n, prune=0.0)
    for R, c in coefficients.items():
        out = out + energy_monomial(R, spec, alpha, prune=0.0).scale(c)
    return out


def interaction_prefactor(spec: ModelSpec) -> float:
    """prod over interacting pairs of cosh(beta lambda v / 2)^2."""
    out = 1.0
    for pair in interacting_pairs(spec):
        out *= math.cosh(0.5 * spec.beta * spec.lam * pair.value) ** 2
    return out


def hardcore_partition_function(spec: ModelSpec, sources: Sequence[BondIndex] = (),
                                arena: Optional[PolymerArena] = None) -> float:
    """
    Mixed first derivative of Z(A) in the distinct source bonds at A = 0.

    With no sources this is Z itself. Every term is Berezin-integrated exactly
    against the four boundary actions.
    """
    _check_side(spec)
    wrapped = [b.wrapped(spec.M) for b in sources]
    if len(set(wrapped)) != len(wrapped):
        raise ValidationError("source bonds must be distinct")
    hard_core = hardcore_polymer_sum(spec, multilinear=bool(wrapped), sources=wrapped, arena=arena)
    integrand = (hard_core * free_source_factor(wrapped, spec.t)).source_coefficient(wrapped)
    total = 0.0
    for alpha in BOUNDARY_LABELS:
        p = to_grassmann(integrand, spec, alpha)
        value = gaussian_integral(p, phi_action_matrix(spec, alpha))
        total += 0.5 * tau(alpha) * value.real
    result = prefactor(spec) * interaction_prefactor(spec) * total
    logger.debug(f"hard-core Z derivative over {len(wrapped)} source bond(s): {result:.12g}")
    return result


def log_hardcore_sum(spec: ModelSpec, arena: Optional[PolymerArena] = None) -> float:
    """log of the scalar part of the hard-core sum."""
    return math.log(hardcore_polymer_sum(spec, arena=arena).constant_term)


def polymer_inventory(spec: ModelSpec, arena: Optional[PolymerArena] = None) -> List[list]:
    """Every polymer with its undecorated activity zeta({}, {}; gamma), in INVENTORY_HEADER order."""
    if arena is None:
        arena = PolymerArena(spec)
    polymers = sorted(arena.all_polymers(), key=lambda p: (p.size, p.key))
    return [[format_bonds(p.bonds), p.size, len(arena.colorings(p)), arena.zeta(p)] for p in polymers]
