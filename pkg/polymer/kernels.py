"""
Truncated cluster-expansion kernels W(R, Y).

    W(R, Y) = sum_n sum_{(gamma_1 .. gamma_n)} (Gamma! / n!) phi^T(gamma_1 .. gamma_n)
              sum_{R_i, Y_i} prod_i zeta(R_i, Y_i; gamma_i)

over ordered tuples whose union is connected and covers R u Y; each bond of
R (resp. Y) is assigned to one polymer containing it. Summing each multiset
once with a fixed member order gives the same value. V_M = W({}, {}).
"""

from dataclasses import dataclass
from itertools import product
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from lattice.model import BondIndex, ModelSpec, all_bonds
from polymer.activities import BondSet, Polymer, PolymerArena, format_bonds
from polymer.mayer import MAX_MAYER_POLYMERS, mayer_coefficient
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger
from utils.reporting import compensated_sum, parallel_map

logger = IsingLabLogger("isinglab.polymer")

KERNEL_HEADER = ["R", "Y", "value", "clusters", "max_polymers", "max_size"]

Cluster = Tuple[Polymer, ...]


@dataclass(frozen=True)
class Truncation:
    """At most max_polymers polymers per cluster, each with at most max_size bonds."""

    max_polymers: int = 2
    max_size: int = 4

    def __post_init__(self):
        if not 1 <= self.max_polymers <= MAX_MAYER_POLYMERS:
            raise ValidationError(f"max_polymers must lie in 1..{MAX_MAYER_POLYMERS}")
        if self.max_size < 1:
            raise ValidationError("max_size must be positive")


@dataclass(frozen=True)
class ClusterKernel:
    R: BondSet
    Y: BondSet
    value: float
    truncation: Truncation
    clusters: int = 0


def _sorted_cluster(polymers: Iterable[Polymer]) -> Cluster:
    return tuple(sorted(polymers, key=lambda p: p.key))


def support(cluster: Cluster) -> BondSet:
    return frozenset().union(*(p.bonds for p in cluster))


def rooted_clusters(arena: PolymerArena, root: BondIndex, truncation: Truncation) -> Set[Cluster]:
    """Connected polymer multisets within the truncation, one member through the root."""

    def through(bond):
        return [p for p in arena.through(bond) if p.size <= truncation.max_size]

    frontier = {(p,) for p in through(root)}
    found = set(frontier)
    for _ in range(truncation.max_polymers - 1):
        grown: Set[Cluster] = set()
        for cluster in frontier:
            for b in sorted(support(cluster)):
                for p in through(b):
                    grown.add(_sorted_cluster(cluster + (p,)))
        grown -= found
        found |= grown
        frontier = grown
    return found


def decorated_value(arena: PolymerArena, cluster: Cluster, R: BondSet, Y: BondSet) -> float:
    """sum over assignments of R and Y bonds to covering members of prod_i zeta(R_i, Y_i; gamma_i)."""
    r_bonds, y_bonds = sorted(R), sorted(Y)
    r_choices = [[i for i, p in enumerate(cluster) if b in p.bonds] for b in r_bonds]
    y_choices = [[i for i, p in enumerate(cluster) if b in p.bonds] for b in y_bonds]
    if any(not c for c in r_choices) or any(not c for c in y_choices):
        return 0.0
    total = 0.0
    for r_assign in product(*r_choices):
        for y_assign in product(*y_choices):
            value = 1.0
            for i, gamma in enumerate(cluster):
                Ri = frozenset(b for b, k in zip(r_bonds, r_assign) if k == i)
                Yi = frozenset(b for b, k in zip(y_bonds, y_assign) if k == i)
                value *= arena.zeta(gamma, Ri, Yi)
                if value == 0.0:
                    break
            total += value
    return total


def kernel_W(R: Iterable[BondIndex], Y: Iterable[BondIndex], spec: ModelSpec,
             truncation: Truncation = Truncation(), arena: Optional[PolymerArena] = None) -> ClusterKernel:
    """W(R, Y) summed over clusters covering R u Y."""
    R = frozenset(b.wrapped(spec.M) for b in R)
    Y = frozenset(b.wrapped(spec.M) for b in Y)
    if not R and not Y:
        value = vacuum_energy(spec, truncation, arena=arena)
        return ClusterKernel(R, Y, value, truncation)
    if spec.lam == 0.0 or not spec.v_table:
        return ClusterKernel(R, Y, 0.0, truncation)
    if arena is None:
        arena = PolymerArena(spec, max_size=truncation.max_size)
    decorated = R | Y
    root = min(decorated)
    terms = []
    count = 0
    for cluster in sorted(rooted_clusters(arena, root, truncation), key=lambda c: [p.key for p in c]):
        if not decorated <= support(cluster):
            continue
        coefficient = mayer_coefficient(cluster)
        if coefficient == 0:
            continue
        count += 1
        terms.append(float(coefficient) * decorated_value(arena, cluster, R, Y))
    value = float(compensated_sum(terms)) if terms else 0.0
    logger.debug(f"W over {count} clusters: {value:.6e}")
    return ClusterKernel(R, Y, value, truncation, count)


def _vacuum_share(arena: PolymerArena, root: BondIndex, truncation: Truncation) -> float:
    """sum over clusters through one bond of phi^T prod zeta / |support|."""
    terms = []
    for cluster in sorted(rooted_clusters(arena, root, truncation), key=lambda c: [p.key for p in c]):
        coefficient = mayer_coefficient(cluster)
        if coefficient == 0:
            continue
        value = float(coefficient)
        for gamma in cluster:
            value *= arena.zeta(gamma)
        terms.append(value / len(support(cluster)))
    return float(compensated_sum(terms)) if terms else 0.0


def _rooted_vacuum_share(task: Tuple[ModelSpec, BondIndex, Truncation]) -> float:
    spec, root, truncation = task
    return _vacuum_share(PolymerArena(spec, max_size=truncation.max_size), root, truncation)


def vacuum_energy(spec: ModelSpec, truncation: Truncation = Truncation(), threads: int = 1,
                  arena: Optional[PolymerArena] = None) -> float:
    """
    V_M = W({}, {}): every cluster counted once through the bonds of its support.

    Root bonds are independent tasks, each with its own arena, reduced in bond order.
    """
    if spec.lam == 0.0 or not spec.v_table:
        return 0.0
    bonds = all_bonds(spec.M)
    logger.info(f"vacuum kernel over {len(bonds)} root bonds (n <= {truncation.max_polymers}, "
                f"|gamma| <= {truncation.max_size})")
    if threads <= 1:
        if arena is None:
            arena = PolymerArena(spec, max_size=truncation.max_size)
        shares = [_vacuum_share(arena, b, truncation) for b in bonds]
    else:
        shares = parallel_map(_rooted_vacuum_share, [(spec, b, truncation) for b in bonds], threads)
    return float(compensated_sum(shares))


def kernel_rows(kernels: Sequence[ClusterKernel]) -> List[list]:
    """CSV rows in KERNEL_HEADER order."""
    return [[format_bonds(k.R), format_bonds(k.Y), k.value, k.clusters, k.truncation.max_polymers,
             k.truncation.max_size] for k in kernels]
