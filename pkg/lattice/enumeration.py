"""
Exhaustive enumeration on tiny tori and a row transfer-matrix oracle.

Configurations are processed in blocks of bitmasks; Boltzmann weights are
shifted by a ground-state bound so that only ratios are exponentiated.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from lattice.model import (BondIndex, ModelSpec, SpinConfiguration, all_bonds, interacting_pairs,
                           site_index)
from utils.combinatorics import joint_cumulant
from utils.exceptions import EnumerationLimitError, RepeatedBondError, ValidationError
from utils.logger import IsingLabLogger
from utils.reporting import parallel_map

logger = IsingLabLogger("isinglab.enumeration")

MAX_ENUMERATION_SIDE = 5
MAX_CUMULANT_ORDER = 6
BLOCK_BITS = 16

Observable = Tuple[int, ...]


def hamiltonian(spec: ModelSpec, cfg: SpinConfiguration) -> float:
    """H = -J sum_bonds s_x s_{x+e_j} - lambda sum_pairs s_x v(x-y) s_y."""
    if cfg.M != spec.M:
        raise ValidationError(f"configuration side {cfg.M} does not match model side {spec.M}")
    s = cfg.as_list()
    energy = 0.0
    for bond in all_bonds(spec.M):
        p, q = bond.endpoints(spec.M)
        energy -= spec.J * s[site_index(p, spec.M)] * s[site_index(q, spec.M)]
    for pair in interacting_pairs(spec):
        energy -= spec.lam * pair.value * s[pair.x] * s[pair.y]
    return energy


def bond_observable(bond: BondIndex, M: int) -> Observable:
    p, q = bond.endpoints(M)
    return (site_index(p, M), site_index(q, M))


def _edge_arrays(spec: ModelSpec):
    left, right, weight = [], [], []
    for bond in all_bonds(spec.M):
        i, k = bond_observable(bond, spec.M)
        left.append(i)
        right.append(k)
        weight.append(spec.J)
    for pair in interacting_pairs(spec):
        left.append(pair.x)
        right.append(pair.y)
        weight.append(spec.lam * pair.value)
    return np.array(left, dtype=np.int64), np.array(right, dtype=np.int64), np.array(weight)


def _energy_bound(weights: np.ndarray) -> float:
    return -float(np.sum(np.abs(weights)))


@dataclass
class _BlockTask:
    spec: ModelSpec
    start: int
    stop: int
    observables: List[Observable]


def _block_sums(task: _BlockTask) -> Tuple[float, Dict[int, float]]:
    """Shifted weight sum and unnormalized moments of every observable subset over one block."""
    spec = task.spec
    n_sites = spec.sites
    left, right, weight = _edge_arrays(spec)
    e0 = _energy_bound(weight)
    cfg = np.arange(task.start, task.stop, dtype=np.int64)
    bits = (cfg[:, None] >> np.arange(n_sites, dtype=np.int64)) & 1
    spins = (2 * bits - 1).astype(np.int8)
    energy = -(spins[:, left] * spins[:, right]).astype(float) @ weight
    w = np.exp(-spec.beta * (energy - e0))
    z = float(np.sum(w))
    obs_values = []
    for obs in task.observables:
        prod = np.ones(len(cfg), dtype=np.int8)
        for site in obs:
            prod = prod * spins[:, site]
        obs_values.append(prod)
    moments: Dict[int, float] = {}
    for subset in range(1, 1 << len(task.observables)):
        prod = np.ones(len(cfg), dtype=np.int8)
        for i in range(len(task.observables)):
            if (subset >> i) & 1:
                prod = prod * obs_values[i]
        moments[subset] = float(np.dot(w, prod))
    return z, moments


@dataclass
class EnumerationResult:
    """Shifted partition sum, per-subset observable sums and the energy shift."""

    shifted_z: float
    shifted_moments: Dict[int, float]
    energy_shift: float
    beta: float

    @property
    def log_partition_function(self) -> float:
        return math.log(self.shifted_z) - self.beta * self.energy_shift

    def moment(self, subset_mask: int) -> float:
        """Normalized moment of the product of the observables in ``subset_mask``."""
        if subset_mask == 0:
            return 1.0
        return self.shifted_moments[subset_mask] / self.shifted_z

    def unnormalized(self, subset_mask: int) -> float:
        """sum_cfg exp(-beta H) prod_{i in subset} O_i."""
        scale = math.exp(-self.beta * self.energy_shift)
        if subset_mask == 0:
            return self.shifted_z * scale
        return self.shifted_moments[subset_mask] * scale


def enumerate_moments(spec: ModelSpec, observables: Sequence[Observable] = (), threads: int = 1,
                      max_side: int = MAX_ENUMERATION_SIDE, progress: bool = False) -> EnumerationResult:
    """Enumerate all 2^{M^2} configurations, accumulating Z and every subset moment."""
    if spec.M > max_side:
        raise EnumerationLimitError(f"exhaustive enumeration needs M <= {max_side}, got M = {spec.M}")
    if len(observables) > MAX_CUMULANT_ORDER + 2:
        raise EnumerationLimitError("too many observables for subset moments")
    total = 1 << spec.sites
    block = 1 << min(BLOCK_BITS, spec.sites)
    tasks = [_BlockTask(spec, start, min(start + block, total), list(observables))
             for start in range(0, total, block)]
    logger.debug(f"Enumerating {total} configurations in {len(tasks)} blocks (M={spec.M}, beta={spec.beta})")
    if progress and threads <= 1:
        results = [_block_sums(task) for task in tqdm(tasks, desc="enumeration", leave=False)]
    else:
        results = parallel_map(_block_sums, tasks, threads)
    # blocks are merged in order with exactly rounded sums
    z = math.fsum(r[0] for r in results)
    moments = {}
    for subset in range(1, 1 << len(observables)):
        moments[subset] = math.fsum(r[1][subset] for r in results)
    _, _, weight = _edge_arrays(spec)
    return EnumerationResult(z, moments, _energy_bound(weight), spec.beta)


def exact_partition_function(spec: ModelSpec, threads: int = 1) -> float:
    """Z = sum over all configurations of exp(-beta H)."""
    result = enumerate_moments(spec, (), threads)
    return result.unnormalized(0)


def check_bonds(bonds: Sequence[BondIndex], M: int) -> List[BondIndex]:
    wrapped = [b.wrapped(M) for b in bonds]
    if len(set(wrapped)) != len(wrapped):
        raise RepeatedBondError("energy correlations require distinct bonds")
    if not wrapped:
        raise ValidationError("at least one bond is required")
    if len(wrapped) > MAX_CUMULANT_ORDER:
        raise EnumerationLimitError(f"cumulants are supported up to order {MAX_CUMULANT_ORDER}")
    return wrapped


def cumulant_from_result(result: EnumerationResult, n: int) -> float:
    def moment(block):
        mask = 0
        for i in block:
            mask |= 1 << i
        return result.moment(mask)

    return float(joint_cumulant(n, moment))


def exact_truncated_energy_correlation(spec: ModelSpec, bonds: Sequence[BondIndex], threads: int = 1) -> float:
    """Joint cumulant of the energy densities a^{-1} s_x s_{x+e_j} on distinct bonds."""
    bonds = check_bonds(bonds, spec.M)
    result = enumerate_moments(spec, [bond_observable(b, spec.M) for b in bonds], threads)
    kappa = cumulant_from_result(result, len(bonds))
    return kappa / spec.a ** len(bonds)


def exact_spin_correlation(spec: ModelSpec, sites: Sequence[Tuple[int, int]], threads: int = 1) -> float:
    """<prod sigma_x> over the given sites (zero field, so odd orders vanish)."""
    obs = (tuple(site_index(s, spec.M) for s in sites),)
    result = enumerate_moments(spec, obs, threads)
    return result.moment(1)


def source_derivative_sums(spec: ModelSpec, bonds: Sequence[BondIndex], threads: int = 1) -> Dict[frozenset, float]:
    """
    z_Y = sum_cfg exp(-beta H) prod_{b in Y} s_b for every subset Y of the given bonds.

    With Z(A) = sum exp(-beta H + a sum_b A_b s_b), the mixed derivative in
    distinct A_b at A = 0 equals a^{|Y|} z_Y.
    """
    bonds = [b.wrapped(spec.M) for b in bonds]
    result = enumerate_moments(spec, [bond_observable(b, spec.M) for b in bonds], threads)
    out = {}
    for subset in range(1 << len(bonds)):
        key = frozenset(bonds[i] for i in range(len(bonds)) if (subset >> i) & 1)
        out[key] = result.unnormalized(subset)
    return out


def transfer_matrix_moment(spec: ModelSpec, bonds: Sequence[BondIndex] = ()) -> float:
    """
    sum_cfg exp(-beta H) prod_b s_b by row-to-row transfer matrices (nearest-neighbour model only).

    Row r holds the spins (r, 0..M-1); direction-2 bonds live inside a row,
    direction-1 bonds join row r to row r + 1.
    """
    if spec.lam != 0.0:
        raise ValidationError("transfer-matrix oracle covers the nearest-neighbour model only")
    M = spec.M
    if M > 10:
        raise EnumerationLimitError("transfer matrix limited to M <= 10")
    states = np.arange(1 << M)
    rows = 2 * ((states[:, None] >> np.arange(M)) & 1) - 1
    K = spec.beta * spec.J
    wrapped = [b.wrapped(M) for b in bonds]
    product = np.eye(1 << M)
    for r in range(M):
        within = np.zeros(1 << M)
        insert_within = np.ones(1 << M)
        for c in range(M):
            pair = rows[:, c] * rows[:, (c + 1) % M]
            within += K * pair
            if BondIndex((r, c), 2) in wrapped:
                insert_within *= pair
        between = K * (rows @ rows.T)
        insert_between = np.ones((1 << M, 1 << M))
        for c in range(M):
            if BondIndex((r, c), 1) in wrapped:
                insert_between *= np.outer(rows[:, c], rows[:, c])
        T = (np.exp(within) * insert_within)[:, None] * np.exp(between) * insert_between
        product = product @ T
    return float(np.trace(product))
