"""
Scale decomposition of the critical propagator and the running coupling state.

Physical momenta are split with Gaussian cutoffs chi_h(k) = exp(-2^{-2h} k^2)
for h < N and chi_N = 1, so that f_h = chi_h - chi_{h-1} is supported around
|k| ~ 2^h. The lattice spacing is a = 2^{-N}. Below h_min the remainder
chi_{h_min} closes the partition of unity.

The single-scale propagator on scale h is the difference of the propagators
with the cutoffs chi_h and chi_{h-1}:

    g^(h)(k) = chi_h M(Wbar_h) / Zbar_{h-1}(k) - chi_{h-1} M(W + sigma_{h-1}) / Z_{h-1}

with M(s) = [[D^+, i s], [-i s, D^-]] / (|D|^2 + s^2), the lattice mass term
W(k) = a^{-1}(cos a k1 + cos a k2 - 2), Zbar_{h-1}(k) = Z_h + zeta_h chi_h(k)
and Zbar sigmabar = Z_h sigma_h + s_h chi_h(k).
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from free_fermion.momentum import MomentumGrid, dirac_symbols
from free_fermion.propagators import Offset, Propagator2x2Field, momentum_sum_at, momentum_sum_field
from lattice.model import ModelSpec
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger
from utils.reporting import write_csv

logger = IsingLabLogger("isinglab.rg")

STATE_HEADER = ["h", "Z", "sigma", "nu", "Z1"]
DECAY_HEADER = ["h", "C", "c", "points"]
DECAY_FLOOR = 1e-12


def h_sigma(sigma: float) -> int:
    """floor(log2 |sigma|); the scale where the mass stops the iteration."""
    if not math.isfinite(sigma) or sigma == 0.0:
        raise ValidationError(f"h_sigma needs a finite non-zero mass, got {sigma}")
    return int(math.floor(math.log2(abs(sigma))))


def scale_index(a: float) -> int:
    """N with a = 2^-N."""
    N = round(-math.log2(a))
    if abs(2.0 ** -N - a) > 1e-12 * a:
        raise ValidationError(f"lattice spacing {a} is not a power of 2")
    return int(N)


@dataclass(frozen=True)
class ScaleDecomposition:
    """Gaussian cutoff family on the scales h_min < h <= N."""

    N: int
    h_min: int

    def __post_init__(self):
        if self.h_min >= self.N:
            raise ValidationError(f"h_min = {self.h_min} must lie below N = {self.N}")

    @property
    def scales(self) -> List[int]:
        """N, N-1, ..., h_min + 1."""
        return list(range(self.N, self.h_min, -1))

    def chi(self, h: int, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        k2 = np.sum(k * k, axis=-1)
        if h >= self.N:
            return np.ones_like(k2)
        return np.exp(-(2.0 ** (-2 * h)) * k2)

    def f(self, h: int, k) -> np.ndarray:
        return self.chi(h, k) - self.chi(h - 1, k)

    def remainder(self, k) -> np.ndarray:
        return self.chi(self.h_min, k)


@dataclass
class PartitionOfUnity:
    scales: List[int]
    values: np.ndarray
    remainder: float

    @property
    def total(self) -> float:
        return float(math.fsum(self.values) + self.remainder)

    def dominant_scale(self) -> int:
        return self.scales[int(np.argmax(self.values))]


def partition_of_unity(decomp: ScaleDecomposition, k) -> PartitionOfUnity:
    """f_h(k) on every scale of the decomposition and the infrared remainder."""
    values = np.array([float(decomp.f(h, k)) for h in decomp.scales])
    return PartitionOfUnity(decomp.scales, values, float(decomp.remainder(k)))


@dataclass
class RGState:
    """Running couplings Z_h, sigma_h, nu_h, Z1_h on the scales h_sigma <= h <= N."""

    N: int
    h_sigma: int
    Z: Dict[int, float] = field(default_factory=dict)
    sigma: Dict[int, float] = field(default_factory=dict)
    nu: Dict[int, float] = field(default_factory=dict)
    Z1: Dict[int, float] = field(default_factory=dict)

    @classmethod
    def initial(cls, N: int, sigma: float, nu: float = 0.0, h_min: Optional[int] = None) -> "RGState":
        """Scale-N data Z = Z1 = 1, sigma_N = sigma."""
        lower = h_sigma(sigma) if h_min is None else int(h_min)
        if lower > N:
            raise ValidationError(f"h_sigma = {lower} lies above N = {N}")
        return cls(N, lower, {N: 1.0}, {N: float(sigma)}, {N: float(nu)}, {N: 1.0})

    @classmethod
    def trivial(cls, N: int, sigma: float, h_min: Optional[int] = None) -> "RGState":
        """No renormalization: Z = Z1 = 1, sigma_h = sigma, nu = 0 on every scale."""
        state = cls.initial(N, sigma, h_min=h_min)
        for h in range(state.h_sigma, N):
            state.set(h, 1.0, float(sigma), 0.0, 1.0)
        return state

    @property
    def sigma_a(self) -> float:
        return self.sigma[self.N]

    @property
    def lowest(self) -> int:
        return min(self.Z)

    def defined(self, h: int) -> bool:
        return h in self.Z and h in self.sigma

    def set(self, h: int, Z: float, sigma: float, nu: float, Z1: float) -> None:
        self.Z[h], self.sigma[h], self.nu[h], self.Z1[h] = Z, sigma, nu, Z1

    def at(self, h: int) -> Tuple[float, float, float, float]:
        if not self.defined(h):
            raise ValidationError(f"running couplings not defined on scale {h}")
        return self.Z[h], self.sigma[h], self.nu[h], self.Z1[h]

    def deviation(self, h: int) -> float:
        """|Z_h - 1| + |Z1_h - 1| + |nu_h| + |sigma_h / sigma - 1|."""
        Z, sigma, nu, Z1 = self.at(h)
        return abs(Z - 1.0) + abs(Z1 - 1.0) + abs(nu) + abs(sigma / self.sigma_a - 1.0)

    def rows(self) -> List[list]:
        return [[h, self.Z[h], self.sigma[h], self.nu[h], self.Z1[h]] for h in sorted(self.Z, reverse=True)]

    def write_csv(self, path: Union[str, Path]) -> Path:
        return write_csv(path, STATE_HEADER, self.rows())


def centered(k: np.ndarray, a: float) -> np.ndarray:
    """Momenta folded into the Brillouin zone (-pi/a, pi/a]."""
    period = 2 * math.pi / a
    return k - period * np.floor((k + math.pi / a) / period)


def _mass_inverse(dp: np.ndarray, dm: np.ndarray, s: np.ndarray) -> np.ndarray:
    den = (-dp * dm).real + s * s
    top = np.stack([dp, 1j * s], axis=-1)
    bottom = np.stack([-1j * s, dm], axis=-1)
    return np.stack([top, bottom], axis=-2) / den[..., None, None]


def _check_scale(h: int, state: RGState) -> None:
    if h > state.N or h < state.h_sigma:
        raise ValidationError(f"scale {h} outside [{state.h_sigma}, {state.N}]")
    needed = [h] if h == state.h_sigma else [h, h - 1]
    for j in needed:
        if not state.defined(j):
            raise ValidationError(f"running couplings not defined down to scale {j}")


def single_scale_kernel(h: int, state: RGState, spec: ModelSpec, grid: MomentumGrid) -> np.ndarray:
    """
    g^(h)(k) on every point of the grid, shape (M, M, 2, 2).

    On h = h_sigma the full infrared cutoff chi_{h_sigma} is used.
    """
    _check_scale(h, state)
    if scale_index(spec.a) != state.N:
        raise ValidationError(f"spacing a = {spec.a} does not match the state's N = {state.N}")
    decomp = ScaleDecomposition(state.N, state.h_sigma - 1)
    K1, K2 = grid.mesh()
    k = np.stack([K1, K2], axis=-1)
    dp, dm = dirac_symbols(spec, k)
    a = spec.a
    wilson = (np.cos(a * K1) + np.cos(a * K2) - 2.0) / a
    kc = centered(k, a)
    chi_h = decomp.chi(h, kc)
    Z_h, sigma_h = state.Z[h], state.sigma[h]
    if h == state.h_sigma:
        return (chi_h / Z_h)[..., None, None] * _mass_inverse(dp, dm, wilson + sigma_h)
    Z_low, sigma_low = state.Z[h - 1], state.sigma[h - 1]
    zeta = Z_low - Z_h
    s = Z_low * sigma_low - Z_h * sigma_h
    Zbar = Z_h + zeta * chi_h
    sigmabar = (Z_h * sigma_h + s * chi_h) / Zbar
    chi_low = decomp.chi(h - 1, kc)
    upper = (chi_h / Zbar)[..., None, None] * _mass_inverse(dp, dm, wilson + sigmabar)
    below = (chi_low / Z_low)[..., None, None] * _mass_inverse(dp, dm, wilson + sigma_low)
    return upper - below


def _grid(spec: ModelSpec, alpha) -> MomentumGrid:
    return MomentumGrid(spec.M, alpha, spec.a)


def single_scale_propagator(h: int, state: RGState, spec: ModelSpec, x: Offset, alpha=(-1, -1)) -> np.ndarray:
    """
    g^(h)(x) = (2 pi / L^2) sum_k e^{-ik.x} g^(h)(k) at the lattice offset x.

    Only spec.a and spec.M are read; the masses come from the state.

    Raises:
        ValidationError: h outside [h_sigma, N] or the state not defined down to h
    """
    grid = _grid(spec, alpha)
    kernel = single_scale_kernel(h, state, spec, grid)
    return momentum_sum_at(kernel, grid, 2 * math.pi / grid.L ** 2, x)


def single_scale_field(h: int, state: RGState, spec: ModelSpec, alpha=(-1, -1)) -> Propagator2x2Field:
    grid = _grid(spec, alpha)
    kernel = single_scale_kernel(h, state, spec, grid)
    values = momentum_sum_field(kernel, grid, 2 * math.pi / grid.L ** 2)
    return Propagator2x2Field(values, spec.M, spec.a, grid.alpha, f"g^({h})")


def telescoped_propagator(state: RGState, spec: ModelSpec, x: Offset, alpha=(-1, -1)) -> np.ndarray:
    """sum_{h_sigma <= h <= N} g^(h)(x)."""
    grid = _grid(spec, alpha)
    kernel = sum(single_scale_kernel(h, state, spec, grid) for h in range(state.h_sigma, state.N + 1))
    return momentum_sum_at(kernel, grid, 2 * math.pi / grid.L ** 2, x)


@dataclass
class DecayFit:
    """||g^(h)(x)|| <= C 2^h exp(-c 2^h |x|) fitted along the first axis."""

    h: int
    C: float
    c: float
    points: int

    @property
    def decaying(self) -> bool:
        return self.c > 0.0

    def row(self) -> list:
        return [self.h, self.C, self.c, self.points]


def fit_decay(h: int, field: Propagator2x2Field) -> DecayFit:
    """
    Least-squares slope of log(||g|| / 2^h) against 2^h |x| beyond the peak 2^h |x| >= 1.

    Values below DECAY_FLOOR times the largest one are dropped; C is the
    smallest constant making the bound hold at every sampled offset.
    """
    scale = 2.0 ** h
    n = np.arange(1, field.M // 2 + 1)
    distance = scale * field.a * n
    norms = np.array([np.linalg.norm(field.at((int(j), 0)), 2) for j in n]) / scale
    keep = norms > DECAY_FLOOR * norms.max()
    fit = keep & (distance >= 1.0)
    if fit.sum() < 2:
        fit = keep
    slope, _ = np.polyfit(distance[fit], np.log(norms[fit]), 1)
    c = -float(slope)
    C = float(np.max(norms[keep] * np.exp(c * distance[keep])))
    return DecayFit(h, C, c, int(fit.sum()))


def single_scale_decay(state: RGState, spec: ModelSpec, scales: Optional[Sequence[int]] = None,
                       alpha=(-1, -1)) -> List[DecayFit]:
    """Decay fits for h in N-1, ..., h_sigma + 1 unless scales are given."""
    if scales is None:
        scales = range(state.N - 1, state.h_sigma, -1)
    fits = []
    for h in scales:
        fit = fit_decay(h, single_scale_field(h, state, spec, alpha))
        logger.debug(f"scale {h}: C = {fit.C:.4g}, c = {fit.c:.4g}")
        if not fit.decaying:
            logger.warning(f"single-scale propagator on scale {h} does not decay (c = {fit.c:.4g})")
        fits.append(fit)
    return fits
