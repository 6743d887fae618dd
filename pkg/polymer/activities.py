"""
Polymers, their colorings and activities.

A polymer gamma is the union of a bond-connected set S of strings. Its black
bonds are those covered by an odd number of strings of S. The activity of a
polymer decorated by energy bonds R and source bonds Y is

    zeta(R, Y; gamma) = sum_{S: gamma(S) = gamma, black(S) >= R u Y}
                        prod_{s in S} tanh(beta lambda v_s / 2)
                        prod_{b in black(S)} f_b

with f_b = t off R u Y, 1 - t^2 on the symmetric difference of R and Y, and
-2t(1 - t^2) on their intersection. The Grassmann activity attaches the
unit-spacing energy bilinear E_b to every bond of R.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from networkx.utils import UnionFind

from free_fermion.momentum import Alpha, parse_alpha
from free_fermion.propagators import bond_generators
from grassmann.algebra import DEFAULT_PRUNE, GrassmannPolynomial, multiply
from lattice.model import BondIndex, ModelSpec
from polymer.strings import StringIndex, StringPath, enumerate_strings
from utils.exceptions import PolymerEnumerationError, ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.polymer")

MAX_COMPONENT_STRINGS = 22

BondSet = FrozenSet[BondIndex]
# black set -> summed string weight
Colorings = Dict[BondSet, float]


def bond_key(bonds: Iterable[BondIndex]) -> Tuple[Tuple[int, int, int], ...]:
    """Canonical form: sorted bonds in lexicographic site order."""
    return tuple(sorted((b.x[0], b.x[1], b.j) for b in bonds))


def format_bonds(bonds: Iterable[BondIndex]) -> str:
    """Space-separated x1:x2:j labels in canonical order."""
    return " ".join(f"{x1}:{x2}:{j}" for x1, x2, j in bond_key(bonds))


def is_connected(bonds: Iterable[BondIndex], M: int) -> bool:
    """Whether the bonds form one cluster of sites."""
    uf = UnionFind()
    roots = set()
    bonds = list(bonds)
    if not bonds:
        return False
    for b in bonds:
        u, v = b.endpoints(M)
        uf.union(u, v)
    for b in bonds:
        roots.add(uf[b.endpoints(M)[0]])
    return len(roots) == 1


@dataclass(frozen=True)
class Polymer:
    """Connected bond set gamma with the black bonds of one covering string set."""

    bonds: BondSet
    black: BondSet = frozenset()

    def __post_init__(self):
        if not self.black <= self.bonds:
            raise ValidationError("black bonds must belong to the polymer")

    @classmethod
    def from_strings(cls, strings: Sequence[StringPath]) -> "Polymer":
        counts: Dict[BondIndex, int] = {}
        for s in strings:
            for b in s.bonds:
                counts[b] = counts.get(b, 0) + 1
        return cls(frozenset(counts), frozenset(b for b, c in counts.items() if c % 2))

    @property
    def size(self) -> int:
        return len(self.bonds)

    @property
    def key(self) -> Tuple[Tuple[int, int, int], ...]:
        return bond_key(self.bonds)

    def overlaps(self, other: "Polymer") -> bool:
        return not self.bonds.isdisjoint(other.bonds)


@dataclass(frozen=True)
class DecoratedPolymer:
    gamma: Polymer
    R: BondSet = frozenset()
    Y: BondSet = frozenset()

    def __post_init__(self):
        if not (self.R <= self.gamma.bonds and self.Y <= self.gamma.bonds):
            raise ValidationError("decorations must lie on the polymer")


def decoration_factor(bond: BondIndex, R: BondSet, Y: BondSet, t: float) -> float:
    in_r, in_y = bond in R, bond in Y
    if in_r and in_y:
        return -2.0 * t * (1.0 - t * t)
    if in_r or in_y:
        return 1.0 - t * t
    return t


def zeta_from_colorings(colorings: Colorings, R: BondSet, Y: BondSet, t: float) -> float:
    decorated = R | Y
    total = 0.0
    for black, weight in colorings.items():
        if not decorated <= black:
            continue
        value = weight
        for b in black:
            value *= decoration_factor(b, R, Y, t)
        total += value
    return total


def _connected_sets(index: StringIndex, roots: Sequence[int], max_size: Optional[int] = None,
                    max_strings: int = MAX_COMPONENT_STRINGS) -> Iterator[Tuple[FrozenSet[int], BondSet]]:
    """
    Every connected string set containing one of the roots, once each.

    Sets containing roots[i] never contain roots[:i]. The union of bonds only
    grows along a branch, so a size bound prunes whole branches.
    """

    def extend(subset, union, candidates, forbidden):
        if len(subset) > max_strings:
            raise PolymerEnumerationError(
                f"connected string set exceeds {max_strings} strings; raise the cap or shrink the lattice")
        yield frozenset(subset), union
        candidates = list(candidates)
        forbidden = set(forbidden)
        while candidates:
            w = candidates.pop()
            new_union = union | index.bond_sets[w]
            if max_size is None or len(new_union) <= max_size:
                fresh = [n for n in sorted(index.neighbours(w))
                         if n not in subset and n not in forbidden and n not in candidates and n != w]
                yield from extend(subset | {w}, new_union, candidates + fresh, forbidden)
            forbidden.add(w)

    for i, r in enumerate(roots):
        if max_size is not None and len(index.bond_sets[r]) > max_size:
            continue
        forbidden = set(roots[:i])
        start = [n for n in sorted(index.neighbours(r)) if n not in forbidden]
        yield from extend({r}, index.bond_sets[r], start, forbidden)


def _coloring(index: StringIndex, subset: Iterable[int]) -> BondSet:
    counts: Dict[BondIndex, int] = {}
    for i in subset:
        for b in index.bond_sets[i]:
            counts[b] = counts.get(b, 0) + 1
    return frozenset(b for b, c in counts.items() if c % 2)


@dataclass
class PolymerArena:
    """
    Polymers grown from a string set, cached by the bond they pass through.

    Every string set whose union contains a bond holds a string through that
    bond, so growing from the strings at a bond finds all colorings of every
    polymer containing it.
    """

    spec: ModelSpec
    max_size: Optional[int] = None
    max_strings: int = MAX_COMPONENT_STRINGS
    strings: Optional[List[StringPath]] = None
    _through: Dict[BondIndex, List[Polymer]] = field(default_factory=dict, repr=False)
    _colorings: Dict[BondSet, Colorings] = field(default_factory=dict, repr=False)
    _zeta: Dict[Tuple[BondSet, BondSet, BondSet], float] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.strings is None:
            self.strings = enumerate_strings(self.spec)
        self.index = StringIndex(self.strings)
        self.weights = np.array([s.weight(self.spec) for s in self.strings])

    def _add(self, subset: FrozenSet[int], union: BondSet, table: Dict[BondSet, Colorings]) -> None:
        black = _coloring(self.index, subset)
        weight = float(np.prod(self.weights[sorted(subset)]))
        colorings = table.setdefault(union, {})
        colorings[black] = colorings.get(black, 0.0) + weight

    def through(self, bond: BondIndex) -> List[Polymer]:
        """Polymers containing the bond, in canonical order."""
        bond = bond.wrapped(self.spec.M)
        if bond not in self._through:
            table: Dict[BondSet, Colorings] = {}
            for subset, union in _connected_sets(self.index, self.index.through(bond), max_size=self.max_size,
                                                 max_strings=self.max_strings):
                self._add(subset, union, table)
            for union, colorings in table.items():
                self._colorings.setdefault(union, colorings)
            self._through[bond] = sorted((Polymer(u) for u in table), key=lambda p: p.key)
        return self._through[bond]

    def all_polymers(self) -> List[Polymer]:
        """Every polymer of the lattice, grown component by component."""
        for component in self.index.components():
            if len(component) > self.max_strings:
                raise PolymerEnumerationError(
                    f"string overlap component has {len(component)} strings, cap is {self.max_strings}")
        table: Dict[BondSet, Colorings] = {}
        for subset, union in _connected_sets(self.index, list(range(len(self.index))), max_size=self.max_size,
                                             max_strings=self.max_strings):
            self._add(subset, union, table)
        for union, colorings in table.items():
            self._colorings[union] = colorings
        logger.debug(f"{len(table)} polymers from {len(self.strings)} strings")
        return sorted((Polymer(u) for u in table), key=lambda p: p.key)

    def colorings(self, gamma: Polymer) -> Colorings:
        if gamma.bonds not in self._colorings:
            self._colorings[gamma.bonds] = polymer_colorings(gamma, self.spec, self.strings)
        return self._colorings[gamma.bonds]

    def zeta(self, gamma: Polymer, R: BondSet = frozenset(), Y: BondSet = frozenset()) -> float:
        key = (gamma.bonds, R, Y)
        if key not in self._zeta:
            self._zeta[key] = zeta_from_colorings(self.colorings(gamma), R, Y, self.spec.t)
        return self._zeta[key]


def polymer_colorings(gamma: Polymer, spec: ModelSpec, strings: Optional[Sequence[StringPath]] = None) -> Colorings:
    """Summed string weights of every connected string set with union exactly gamma, by black set."""
    if not is_connected(gamma.bonds, spec.M):
        raise ValidationError("polymer bonds are not connected")
    if strings is None:
        strings = enumerate_strings(spec)
    inside = [s for s in strings if s.bond_set <= gamma.bonds]
    index = StringIndex(inside)
    weights = [s.weight(spec) for s in inside]
    out: Colorings = {}
    for subset, union in _connected_sets(index, list(range(len(inside)))):
        if union != gamma.bonds:
            continue
        black = _coloring(index, subset)
        weight = 1.0
        for i in subset:
            weight *= weights[i]
        out[black] = out.get(black, 0.0) + weight
    return out


def polymer_activity(d: DecoratedPolymer, spec: ModelSpec, strings: Optional[Sequence[StringPath]] = None) -> float:
    """The scalar kernel zeta(R, Y; gamma)."""
    return zeta_from_colorings(polymer_colorings(d.gamma, spec, strings), d.R, d.Y, spec.t)


def max_abs_activity(colorings: Colorings, t: float) -> float:
    """max over R, Y of |zeta(R, Y; gamma)|."""
    black_union = sorted(frozenset().union(*colorings)) if colorings else []
    k = len(black_union)
    if k == 0:
        return abs(sum(colorings.values()))
    factors = np.array([t, 1.0 - t * t, -2.0 * t * (1.0 - t * t)])
    # undecorated, on exactly one of R and Y, on both
    states = np.indices((3,) * k).reshape(k, -1).T
    total = np.zeros(len(states))
    for black, weight in colorings.items():
        inside = np.array([b in black for b in black_union])
        allowed = np.all(states[:, ~inside] == 0, axis=1)
        values = np.prod(factors[states[:, inside]], axis=1) if inside.any() else np.ones(len(states))
        total += np.where(allowed, weight * values, 0.0)
    return float(np.max(np.abs(total)))


def energy_monomial(bonds: Iterable[BondIndex], spec: ModelSpec, alpha: Alpha,
                    prune: float = DEFAULT_PRUNE) -> GrassmannPolynomial:
    """prod_{b} E_b at unit spacing, in sorted bond order, as a Grassmann polynomial on 4 M^2 generators."""
    n = 4 * spec.M * spec.M
    out = GrassmannPolynomial.constant(n, 1.0, prune=prune)
    for b in sorted(bonds):
        i, j, sign = bond_generators(b, spec, alpha)
        out = multiply(out, GrassmannPolynomial.from_indices(n, [i, j], float(sign), prune=prune))
    return out


def grassmann_activity(gamma: Polymer, spec: ModelSpec, alpha=(-1, -1),
                       colorings: Optional[Colorings] = None, prune: float = DEFAULT_PRUNE) -> GrassmannPolynomial:
    """zeta_G(gamma) = sum_R zeta(R, {}; gamma) prod_{b in R} E_b."""
    alpha = parse_alpha(alpha)
    if colorings is None:
        colorings = polymer_colorings(gamma, spec)
    n = 4 * spec.M * spec.M
    t = spec.t
    out = GrassmannPolynomial.zero(n, prune=prune)
    for black, weight in colorings.items():
        term = GrassmannPolynomial.constant(n, weight, prune=prune)
        for b in sorted(black):
            term = multiply(term, energy_monomial([b], spec, alpha, prune).scale(1.0 - t * t) + t)
        out = out + term
    return out
