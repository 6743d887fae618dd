"""
Explicit low-order diagrams of the multiscale expansion.

The leading quartic kernel comes from the single-string activities: a string
S of length l contributes w_S (1 - t^2)^2 t^{l-2} E_b E_b' for each pair of
its bonds, with E_b restricted to its psi-psi block. Contracting two of the
four fields with the source (1/2 pi) sum_z a^2 psi_z sigma_2 psi_z through
single-scale propagators and localizing the remaining two gives the one-loop
contribution to the Z1 beta function on that scale.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from free_fermion.momentum import SIGMA2, MomentumGrid, mass
from free_fermion.propagators import Offset, Propagator2x2Field
from free_fermion.symmetry import energy_bilinear
from grassmann.algebra import permutation_sign
from lattice.model import ModelSpec
from polymer.strings import pair_strings
from rg.scales import RGState, scale_index, single_scale_field, single_scale_kernel
from scaling.loops import FLIP, OMEGA, check_points
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger
from utils.reporting import parallel_map

logger = IsingLabLogger("isinglab.rg")

BETA_HEADER = ["h", "beta_Z1", "imag"]
MEMORY_HEADER = ["k", "value"]
DIAGRAM_FLOOR = 1e-13
# strings are built on a torus large enough that no path wraps
_UNWRAPPED_SIDE = 1 << 16

Field = Tuple[Offset, int]


@dataclass(frozen=True)
class QuarticTerm:
    coefficient: complex
    fields: Tuple[Field, Field, Field, Field]


def _unwrap(site: Offset) -> Offset:
    half = _UNWRAPPED_SIDE // 2
    return tuple(c - _UNWRAPPED_SIDE if c >= half else c for c in site)


def quartic_kernel(spec: ModelSpec) -> List[QuarticTerm]:
    """
    Quartic psi monomials of the single-string activities rooted at the origin.

    Only strings through at least two bonds carry a quartic term; one-bond
    strings renormalize t.
    """
    t = spec.t
    blocks = {j: energy_bilinear(spec, j)[:2, :2] for j in (1, 2)}
    terms: List[QuarticTerm] = []
    for d, v in sorted(spec.v_table.items()):
        if v == 0.0 or d[0] < 0 or (d[0] == 0 and d[1] <= 0):
            continue
        for string in pair_strings((0, 0), d, d, v, _UNWRAPPED_SIDE):
            bonds = [(_unwrap(b.x), b.j) for b in string.bonds]
            if len(bonds) < 2:
                continue
            weight = string.weight(spec) * (1.0 - t * t) ** 2 * t ** (len(bonds) - 2)
            for (s1, j1), (s2, j2) in combinations(bonds, 2):
                e1 = (1, 0) if j1 == 1 else (0, 1)
                e2 = (1, 0) if j2 == 1 else (0, 1)
                n1 = (s1[0] + e1[0], s1[1] + e1[1])
                n2 = (s2[0] + e2[0], s2[1] + e2[1])
                for f1, g1, f2, g2 in product(range(2), repeat=4):
                    c = weight * blocks[j1][f1, g1] * blocks[j2][f2, g2]
                    if c != 0.0:
                        terms.append(QuarticTerm(complex(c), ((s1, f1), (n1, g1), (s2, f2), (n2, g2))))
    logger.debug(f"quartic kernel: {len(terms)} monomials")
    return terms


class SourceBubble:
    """
    (2 pi)^2 / L^2 sum_k e^{-ik.a Delta} g_A(k) sigma_2 g_A(-k)^T on one scale.

    With a second kernel the mixed bubble, symmetrized in A and B, is taken.
    It is the source insertion between two fields at relative offset Delta.
    """

    def __init__(self, grid: MomentumGrid, kernel_a: np.ndarray, kernel_b: Optional[np.ndarray] = None):
        self.grid = grid
        M = grid.M
        neg = grid.negation_index()
        A = kernel_a.reshape(M * M, 2, 2)
        if kernel_b is None:
            self._integrand = np.einsum("nab,bc,ndc->nad", A, SIGMA2, A[neg])
        else:
            B = kernel_b.reshape(M * M, 2, 2)
            self._integrand = (np.einsum("nab,bc,ndc->nad", A, SIGMA2, B[neg])
                               + np.einsum("nab,bc,ndc->nad", B, SIGMA2, A[neg]))
        self._k = grid.points()
        self._cache: Dict[Offset, np.ndarray] = {}

    def __call__(self, delta: Offset) -> np.ndarray:
        if delta not in self._cache:
            phase = np.exp(-1j * self.grid.a * (self._k @ np.asarray(delta, dtype=float)))
            prefactor = (2 * math.pi) ** 2 / self.grid.L ** 2
            self._cache[delta] = prefactor * np.einsum("n,nab->ab", phase, self._integrand)
        return self._cache[delta]


def source_kernel_from_bubble(terms: Sequence[QuarticTerm], bubble: SourceBubble) -> np.ndarray:
    """
    Quadratic source kernel W after contracting every pair of quartic fields with the source.

    E^T(psi_i psi_j; source) = -(1/pi) bubble(p_i - p_j)[f_i, f_j].
    """
    W = np.zeros((2, 2), dtype=complex)
    for term in terms:
        for i, j in combinations(range(4), 2):
            k, l = (r for r in range(4) if r not in (i, j))
            (pi, fi), (pj, fj) = term.fields[i], term.fields[j]
            fk, fl = term.fields[k][1], term.fields[l][1]
            delta = (pi[0] - pj[0], pi[1] - pj[1])
            contraction = -bubble(delta)[fi, fj] / math.pi
            W[fk, fl] += term.coefficient * permutation_sign((i, j, k, l)) * contraction
    return W


def _source_coefficient(W: np.ndarray) -> complex:
    antisym = 0.5 * (W - W.T)
    return complex(math.pi * np.trace(SIGMA2 @ antisym))


def _default_state(spec: ModelSpec, state: Optional[RGState]) -> RGState:
    if state is not None:
        return state
    return RGState.trivial(scale_index(spec.a), mass(spec))


@dataclass
class SourceBetaReport:
    """beta^{Z1}_h per scale with the fit |beta_h| <= C |lambda| 2^{theta (h - N)}."""

    N: int
    lam: float
    values: Dict[int, complex] = field(default_factory=dict)
    theta: float = math.inf
    C: float = 0.0

    @property
    def decaying(self) -> bool:
        return self.theta > 0.0

    def beta(self) -> Dict[int, float]:
        return {h: v.real for h, v in self.values.items()}

    def rows(self) -> List[list]:
        return [[h, v.real, v.imag] for h, v in sorted(self.values.items(), reverse=True)]


def _geometric_fit(depths: np.ndarray, magnitudes: np.ndarray) -> Tuple[float, float]:
    """Rate r and constant C of magnitudes <= C 2^{-r depth}; r = inf when everything vanishes."""
    keep = magnitudes > DIAGRAM_FLOOR * max(1.0, float(magnitudes.max(initial=0.0)))
    if keep.sum() < 2:
        return math.inf, float(magnitudes.max(initial=0.0))
    slope, _ = np.polyfit(depths[keep], np.log2(magnitudes[keep]), 1)
    rate = -float(slope)
    C = float(np.max(magnitudes[keep] * 2.0 ** (rate * depths[keep])))
    return rate, C


def _beta_on_scale(task) -> complex:
    h, state, spec, terms, alpha = task
    grid = MomentumGrid(spec.M, alpha, spec.a)
    kernel = single_scale_kernel(h, state, spec, grid)
    return _source_coefficient(source_kernel_from_bubble(terms, SourceBubble(grid, kernel)))


def one_loop_source_beta(spec: ModelSpec, state: Optional[RGState] = None, scales: Optional[Sequence[int]] = None,
                         alpha=(-1, -1), threads: int = 1) -> SourceBetaReport:
    """
    One-loop beta^{Z1}_h from the quartic kernel and g^(h) on the momentum grid of spec.

    Args:
        spec: model; its spacing fixes N and its M the grid
        state: running couplings, the trivial state at mass(spec) when omitted
        scales: scales to evaluate, N-1 ... h_sigma + 1 by default
        threads: worker processes, one scale per task
    """
    state = _default_state(spec, state)
    if scales is None:
        scales = range(state.N - 1, state.h_sigma, -1)
    scales = list(scales)
    terms = quartic_kernel(spec)
    logger.info(f"One-loop Z1 beta on {len(scales)} scales from {len(terms)} quartic monomials")
    values = parallel_map(_beta_on_scale, [(h, state, spec, terms, alpha) for h in scales], threads=threads)
    report = SourceBetaReport(state.N, spec.lam, dict(zip(scales, values)))
    imag = max((abs(v.imag) for v in values), default=0.0)
    if imag > 1e-8 * max(1.0, max((abs(v.real) for v in values), default=0.0)):
        logger.warning(f"one-loop source beta has imaginary parts up to {imag:.3e}")
    if len(scales) >= 2 and spec.lam != 0.0:
        depths = np.array([state.N - h for h in scales], dtype=float)
        magnitudes = np.array([abs(values[i].real) for i in range(len(scales))]) / abs(spec.lam)
        report.theta, report.C = _geometric_fit(depths, magnitudes)
        logger.info(f"|beta^Z1_h| <= {report.C:.4g} |lambda| 2^({report.theta:.3f} (h - N))")
    return report


@dataclass
class ShortMemoryReport:
    """Mixed-scale bubbles through scales k > h with the fitted decay 2^{-rate (k - h)}."""

    h: int
    values: Dict[int, complex]
    rate: float
    C: float
    theta: float

    @property
    def holds(self) -> bool:
        return self.rate >= self.theta

    def rows(self) -> List[list]:
        return [[k, abs(v)] for k, v in sorted(self.values.items())]


def short_memory_profile(spec: ModelSpec, h: int, state: Optional[RGState] = None, theta: float = 0.5,
                         alpha=(-1, -1)) -> ShortMemoryReport:
    """Source contributions with one propagator on scale h and the other on k = h+1 ... N."""
    state = _default_state(spec, state)
    if not state.h_sigma <= h < state.N:
        raise ValidationError(f"scale {h} leaves no higher scale below N = {state.N}")
    grid = MomentumGrid(spec.M, alpha, spec.a)
    terms = quartic_kernel(spec)
    low = single_scale_kernel(h, state, spec, grid)
    values = {}
    for k in range(h + 1, state.N + 1):
        high = single_scale_kernel(k, state, spec, grid)
        values[k] = _source_coefficient(source_kernel_from_bubble(terms, SourceBubble(grid, low, high)))
    depths = np.array([k - h for k in values], dtype=float)
    rate, C = _geometric_fit(depths, np.array([abs(v) for v in values.values()]))
    report = ShortMemoryReport(h, values, rate, C, theta)
    logger.info(f"short memory on scale {h}: rate {rate:.3f}, holds at theta = {theta}: {report.holds}")
    return report


def multiscale_loop_sum(points: Sequence[Offset], state: RGState, spec: ModelSpec, alpha=(-1, -1),
                        weighted: bool = True) -> float:
    """
    Loop sum with every edge expanded in single-scale propagators.

    The vertex between edges on scales h and h' carries Z1_{min(h, h')}; the
    product over a loop becomes a product of block transfer matrices indexed
    by (scale, omega). points are lattice offsets.
    """
    pts = check_points(points)
    m = len(pts)
    scales = list(range(state.N, state.h_sigma - 1, -1))
    fields: Dict[int, Propagator2x2Field] = {h: single_scale_field(h, state, spec, alpha) for h in scales}
    S = len(scales)
    weights = np.ones((S, S))
    if weighted:
        for a_, ha in enumerate(scales):
            for b_, hb in enumerate(scales):
                weights[a_, b_] = state.Z1[min(ha, hb)]
    blocks = np.zeros((m, m, 2 * S, 2 * S), dtype=complex)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            d = (round(pts[i][0] - pts[j][0]), round(pts[i][1] - pts[j][1]))
            for a_, h in enumerate(scales):
                T = OMEGA @ fields[h].at(d) @ FLIP
                for b_ in range(S):
                    blocks[i, j, 2 * a_:2 * a_ + 2, 2 * b_:2 * b_ + 2] = weights[a_, b_] * T
    total = 0.0
    for order in permutations(range(1, m)):
        cycle = (0,) + order
        prod = np.eye(2 * S, dtype=complex)
        for k in range(m):
            prod = prod @ blocks[cycle[k], cycle[(k + 1) % m]]
        total += np.trace(prod)
    value = -0.5 * (1j / math.pi) ** m * total
    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        logger.warning(f"multiscale loop sum has imaginary part {value.imag:.3e}")
    return float(value.real)
