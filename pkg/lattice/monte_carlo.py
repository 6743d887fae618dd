"""
Monte Carlo estimation of truncated energy correlations.

Wolff cluster updates at lambda = 0, random-scan Metropolis for the
perturbed model. Randomness comes from a counter-based Philox stream
keyed by (seed, chain, sweep), so chains are reproducible in parallel.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from lattice.enumeration import check_bonds
from lattice.model import BondIndex, ModelSpec, coupling_matrix
from utils.combinatorics import joint_cumulant
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger
from utils.reporting import parallel_map

logger = IsingLabLogger("isinglab.monte_carlo")

MAX_MC_SIDE = 128
MIN_SWEEPS = 1000


def sweep_generator(seed: int, chain: int, sweep: Optional[int] = None) -> np.random.Generator:
    """Counter-based generator for one sweep of one chain (sweep None: initial state)."""
    key = [seed, chain] if sweep is None else [seed, chain, sweep + 1]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@dataclass
class MCResult:
    """Estimate of a truncated correlation with its jackknife error and run metadata."""

    estimate: float
    standard_error: float
    method: str
    fallback: bool
    sweeps: int
    chains: int
    warnings: List[str] = field(default_factory=list)


def _uniforms(rng: np.random.Generator, chunk: int = 4096) -> Iterator[float]:
    """Endless U(0, 1) stream drawn from the generator in blocks."""
    while True:
        yield from rng.random(chunk).tolist()


class SpinSampler:
    """
    Single-chain sampler over the neighbour lists of the coupling matrix.

    A Wolff sweep is a fixed number of cluster flips. Burn-in sweeps flip
    clusters until one lattice volume has turned over; calibrate() then
    freezes the per-sweep count from the burn-in cluster sizes.
    """

    def __init__(self, spec: ModelSpec, method: str):
        self.spec = spec
        self.method = method
        K = coupling_matrix(spec)
        self.neighbours: List[List[int]] = []
        self.couplings: List[List[float]] = []
        for i in range(spec.sites):
            nz = np.nonzero(K[i])[0]
            self.neighbours.append(nz.tolist())
            self.couplings.append(K[i, nz].tolist())
        # Wolff bond probabilities per neighbour
        self.add_prob = [[1.0 - math.exp(-2.0 * spec.beta * c) for c in row] for row in self.couplings]
        self.clusters_per_sweep: Optional[int] = None

    def metropolis_sweep(self, spins: np.ndarray, rng: np.random.Generator) -> None:
        n = len(spins)
        s = spins.tolist()
        draw = _uniforms(rng)
        beta = self.spec.beta
        for _ in range(n):
            i = min(int(next(draw) * n), n - 1)
            local = sum(c * s[j] for c, j in zip(self.couplings[i], self.neighbours[i]))
            delta = 2.0 * s[i] * local
            if delta <= 0.0 or next(draw) < math.exp(-beta * delta):
                s[i] = -s[i]
        spins[:] = s

    def flip_cluster(self, s: List[int], draw: Iterator[float]) -> int:
        """Grow and flip one Wolff cluster from a uniform root; returns its size."""
        n = len(s)
        root = min(int(next(draw) * n), n - 1)
        value = s[root]
        s[root] = -value
        stack = [root]
        size = 1
        while stack:
            i = stack.pop()
            for j, p in zip(self.neighbours[i], self.add_prob[i]):
                if s[j] == value and next(draw) < p:
                    s[j] = -value
                    stack.append(j)
                    size += 1
        return size

    def wolff_sweep(self, spins: np.ndarray, rng: np.random.Generator) -> List[int]:
        s = spins.tolist()
        draw = _uniforms(rng)
        if self.clusters_per_sweep is None:
            sizes = []
            flipped = 0
            while flipped < len(s):
                sizes.append(self.flip_cluster(s, draw))
                flipped += sizes[-1]
        else:
            sizes = [self.flip_cluster(s, draw) for _ in range(self.clusters_per_sweep)]
        spins[:] = s
        return sizes

    def calibrate(self, sizes: Sequence[int]) -> int:
        """Freeze the clusters per sweep at sites / mean burn-in cluster size."""
        mean = float(np.mean(sizes)) if len(sizes) else 1.0
        self.clusters_per_sweep = max(1, int(round(self.spec.sites / mean)))
        logger.debug(f"Wolff: {self.clusters_per_sweep} clusters per sweep (mean size {mean:.2f})")
        return self.clusters_per_sweep

    def sweep(self, spins: np.ndarray, rng: np.random.Generator) -> List[int]:
        """One sweep in place; the Wolff path returns the flipped cluster sizes."""
        if self.method == "wolff":
            return self.wolff_sweep(spins, rng)
        self.metropolis_sweep(spins, rng)
        return []


def choose_method(spec: ModelSpec) -> Tuple[str, bool]:
    """
    Wolff on the nearest-neighbour model, Metropolis once lambda != 0.

    The flag is set when the couplings are not all ferromagnetic, i.e. when no
    cluster move could have been used.
    """
    if spec.lam == 0.0:
        return "wolff", False
    return "metropolis", bool(np.any(coupling_matrix(spec) < 0.0))


@dataclass
class _ChainTask:
    spec: ModelSpec
    method: str
    observables: List[int]
    sweeps: int
    thermalization: int
    seed: int
    chain: int


def _translated_products(spins: np.ndarray, spec: ModelSpec, bonds: List[BondIndex]) -> np.ndarray:
    """Translation-averaged products for every non-empty subset of the bonds."""
    M = spec.M
    grid = spins.reshape(M, M)
    values = []
    for bond in bonds:
        shifted = np.roll(grid, -1, axis=0) if bond.j == 1 else np.roll(grid, -1, axis=1)
        field_ = grid * shifted
        # value at translation s is field_[x + s]
        values.append(np.roll(np.roll(field_, -bond.x[0], axis=0), -bond.x[1], axis=1))
    m = len(bonds)
    out = np.empty((1 << m) - 1)
    for subset in range(1, 1 << m):
        prod = np.ones((M, M))
        for i in range(m):
            if (subset >> i) & 1:
                prod = prod * values[i]
        out[subset - 1] = prod.mean()
    return out


def _run_chain(task: _ChainTask) -> np.ndarray:
    spec = task.spec
    sampler = SpinSampler(spec, task.method)
    bonds = [BondIndex.from_index(b, spec.M) for b in task.observables]
    init = sweep_generator(task.seed, task.chain)
    spins = np.where(init.random(spec.sites) < 0.5, -1, 1).astype(np.int64)
    burn_in_sizes: List[int] = []
    for s in range(task.thermalization):
        sizes = sampler.sweep(spins, sweep_generator(task.seed, task.chain, s))
        if 2 * s >= task.thermalization:
            burn_in_sizes.extend(sizes)
    if task.method == "wolff":
        sampler.calibrate(burn_in_sizes)
    samples = np.empty((task.sweeps, (1 << len(bonds)) - 1))
    for s in range(task.sweeps):
        sampler.sweep(spins, sweep_generator(task.seed, task.chain, task.thermalization + s))
        samples[s] = _translated_products(spins, spec, bonds)
    return samples


def _cumulant_from_means(means: np.ndarray, m: int) -> float:
    def moment(block):
        mask = 0
        for i in block:
            mask |= 1 << i
        return means[mask - 1]

    return float(joint_cumulant(m, moment))


def jackknife_cumulant(samples: np.ndarray, m: int, blocks: int = 20) -> Tuple[float, float]:
    """Cumulant estimate and its blocked jackknife standard error."""
    n = samples.shape[0]
    blocks = max(2, min(blocks, n))
    edges = np.linspace(0, n, blocks + 1).astype(int)
    block_sums = np.array([samples[edges[b]:edges[b + 1]].sum(axis=0) for b in range(blocks)])
    counts = np.diff(edges)
    total = block_sums.sum(axis=0)
    estimate = _cumulant_from_means(total / n, m)
    leave_out = np.array([
        _cumulant_from_means((total - block_sums[b]) / (n - counts[b]), m) for b in range(blocks)
    ])
    mean_lo = leave_out.mean()
    variance = (blocks - 1) / blocks * np.sum((leave_out - mean_lo) ** 2)
    return estimate, float(math.sqrt(variance))


def mc_estimate_energy_correlation(spec: ModelSpec, bonds: Sequence[BondIndex], sweeps: int, seed: int,
                                   chains: int = 1, thermalization: Optional[int] = None, threads: int = 1,
                                   trace_path: Optional[Path] = None) -> MCResult:
    """
    Connected correlation of the energy densities on the given bonds.

    Products are averaged over all lattice translations of the bond set;
    errors are blocked-jackknife over the pooled chains.
    """
    if spec.M > MAX_MC_SIDE:
        raise ValidationError(f"Monte Carlo supports M <= {MAX_MC_SIDE}")
    if sweeps < MIN_SWEEPS:
        raise ValidationError(f"at least {MIN_SWEEPS} sweeps are required, got {sweeps}")
    bonds = check_bonds(bonds, spec.M)
    method, fallback = choose_method(spec)
    warnings = []
    if fallback:
        warnings.append("non-ferromagnetic couplings: Wolff path unavailable, using Metropolis")
        logger.warning(warnings[-1])
    if thermalization is None:
        thermalization = max(100, sweeps // 10)
    logger.info(f"MC {method}: M={spec.M} beta={spec.beta} lambda={spec.lam} sweeps={sweeps} chains={chains}")
    tasks = [_ChainTask(spec, method, [b.index(spec.M) for b in bonds], sweeps, thermalization, seed, c)
             for c in range(chains)]
    if threads <= 1 and chains > 1:
        chain_samples = [_run_chain(t) for t in tqdm(tasks, desc="mc chains", leave=False)]
    else:
        chain_samples = parallel_map(_run_chain, tasks, threads)
    samples = np.concatenate(chain_samples, axis=0)
    if trace_path is not None:
        write_trace(trace_path, samples, len(bonds))
    estimate, error = jackknife_cumulant(samples, len(bonds))
    scale = spec.a ** len(bonds)
    return MCResult(estimate / scale, error / scale, method, fallback, sweeps, chains, warnings)


def write_trace(path: Path, samples: np.ndarray, m: int) -> None:
    """Dump per-sweep subset products as CSV (sweep, observable columns)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["sweep"] + [f"prod_{subset:0{m}b}" for subset in range(1, 1 << m)]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(samples):
            writer.writerow([i] + [repr(float(v)) for v in row])


def metropolis_transition_matrix(spec: ModelSpec) -> np.ndarray:
    """
    Random-scan single-site Metropolis kernel P[s, s'] on all 2^{M^2} states.

    State index s is the spin bitmask (bit set means +1).
    """
    n = spec.sites
    if n > 12:
        raise ValidationError("transition matrix only built for at most 12 sites")
    K = coupling_matrix(spec)
    states = np.arange(1 << n)
    spins = 2 * ((states[:, None] >> np.arange(n)) & 1) - 1
    P = np.zeros((1 << n, 1 << n))
    for s in states:
        sigma = spins[s]
        for i in range(n):
            delta = 2.0 * sigma[i] * float(K[i] @ sigma)
            accept = min(1.0, math.exp(-spec.beta * delta))
            P[s, s ^ (1 << i)] += accept / n
        P[s, s] = 1.0 - P[s].sum()
    return P


def boltzmann_weights(spec: ModelSpec) -> np.ndarray:
    """Normalized Gibbs weights over all states, in the bitmask order of the transition matrix."""
    n = spec.sites
    K = coupling_matrix(spec)
    states = np.arange(1 << n)
    spins = 2 * ((states[:, None] >> np.arange(n)) & 1) - 1
    energy = -0.5 * np.einsum("si,ij,sj->s", spins, K, spins)
    w = np.exp(-spec.beta * (energy - energy.min()))
    return w / w.sum()
