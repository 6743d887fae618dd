"""
Strings of the finite-range interaction.

Each interacting pair {x, y} contributes sigma_x sigma_y = (U + D) / 2, where
U and D are products of bond energies along the two L-shaped lattice paths
joining x and y. With the pair oriented so that the horizontal displacement
is non-negative, the up-path U turns at the corner with the larger second
coordinate and the down-path D at the other one. Straight pairs give U = D;
both copies are kept.
"""

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Tuple

import networkx as nx

from lattice.model import BondIndex, ModelSpec, interacting_pairs
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.polymer")

Site = Tuple[int, int]

MAX_STRING_LENGTH = 3
STRING_HEADER = ["index", "x1", "x2", "y1", "y2", "kind", "v", "bonds"]


@dataclass(frozen=True)
class StringPath:
    """One L-shaped path between the endpoints of an interacting pair."""

    x: Site
    y: Site
    kind: str
    bonds: Tuple[BondIndex, ...]
    v: float

    @property
    def bond_set(self) -> FrozenSet[BondIndex]:
        return frozenset(self.bonds)

    def weight(self, spec: ModelSpec) -> float:
        """tanh(beta lambda v_S / 2)."""
        return math.tanh(0.5 * spec.beta * spec.lam * self.v)


def _step_bond(site: Site, axis: int, sign: int, M: int) -> Tuple[BondIndex, Site]:
    """Bond crossed by one unit step and the site reached."""
    if axis == 0:
        target = (site[0] + sign, site[1])
        lower = site if sign > 0 else target
        return BondIndex(lower, 1).wrapped(M), (target[0] % M, target[1] % M)
    target = (site[0], site[1] + sign)
    lower = site if sign > 0 else target
    return BondIndex(lower, 2).wrapped(M), (target[0] % M, target[1] % M)


def l_path(start: Site, d: Tuple[int, int], vertical_first: bool, M: int) -> Tuple[BondIndex, ...]:
    """Bonds of the L-shaped path from start to start + d."""
    legs = [(1, d[1]), (0, d[0])] if vertical_first else [(0, d[0]), (1, d[1])]
    bonds: List[BondIndex] = []
    site = start
    for axis, length in legs:
        sign = 1 if length > 0 else -1
        for _ in range(abs(length)):
            bond, site = _step_bond(site, axis, sign, M)
            bonds.append(bond)
    return tuple(bonds)


def pair_strings(x: Site, y: Site, d: Tuple[int, int], v: float, M: int) -> Tuple[StringPath, StringPath]:
    """The U and D strings of a pair with minimal-image displacement d = y - x."""
    if d[0] < 0 or (d[0] == 0 and d[1] < 0):
        x, y, d = y, x, (-d[0], -d[1])
    up = l_path(x, d, vertical_first=d[1] > 0, M=M)
    down = l_path(x, d, vertical_first=d[1] < 0, M=M)
    return StringPath(x, y, "U", up, v), StringPath(x, y, "D", down, v)


def enumerate_strings(spec: ModelSpec) -> List[StringPath]:
    """Both strings of every unordered interacting pair, U before D, pairs in site order."""
    if spec.M0 > MAX_STRING_LENGTH:
        raise ValidationError(f"interaction range M0 = {spec.M0} exceeds the supported {MAX_STRING_LENGTH}")
    M = spec.M
    strings: List[StringPath] = []
    for pair in interacting_pairs(spec):
        x = divmod(pair.x, M)
        y = divmod(pair.y, M)
        strings.extend(pair_strings(x, y, pair.offset, pair.value, M))
    if strings and spec.minimal_image_degenerate:
        logger.warning(f"2 R0 >= M on the {M}x{M} torus: strings follow the minimal-image convention")
    logger.debug(f"{len(strings)} strings on the {M}x{M} torus")
    return strings


class StringIndex:
    """Strings with their bond incidence and overlap graph (strings sharing a bond are adjacent)."""

    def __init__(self, strings: Sequence[StringPath]):
        self.strings = list(strings)
        self.bond_sets = [s.bond_set for s in self.strings]
        self.by_bond: Dict[BondIndex, List[int]] = {}
        for i, bonds in enumerate(self.bond_sets):
            for b in sorted(bonds):
                self.by_bond.setdefault(b, []).append(i)
        self.graph = nx.Graph()
        self.graph.add_nodes_from(range(len(self.strings)))
        for members in self.by_bond.values():
            for p, i in enumerate(members):
                for j in members[p + 1:]:
                    self.graph.add_edge(i, j)

    def __len__(self) -> int:
        return len(self.strings)

    def through(self, bond: BondIndex) -> List[int]:
        return self.by_bond.get(bond, [])

    def neighbours(self, i: int) -> FrozenSet[int]:
        return frozenset(self.graph.adj[i])

    def components(self) -> List[List[int]]:
        return [sorted(c) for c in sorted(nx.connected_components(self.graph), key=min)]


def string_rows(strings: Sequence[StringPath]) -> List[list]:
    """Inventory rows matching STRING_HEADER."""
    rows = []
    for i, s in enumerate(strings):
        bonds = " ".join(f"{b.x[0]}:{b.x[1]}:{b.j}" for b in s.bonds)
        rows.append([i, s.x[0], s.x[1], s.y[0], s.y[1], s.kind, s.v, bonds])
    return rows
