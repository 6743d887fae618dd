"""
Position-space propagators of the free fermions on the torus.

Fields are tabulated on lattice offsets n in {0..M-1}^2 (physical offset
x = a n). Offsets outside the fundamental cell pick up the boundary sign
alpha_i per wrap, which is what makes g(x) = -g(-x)^T hold on the torus.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from free_fermion.momentum import (Alpha, MomentumGrid, alpha_label, chi_form, corrected_form, modes_from_phi,
                                   parse_alpha, psi_form, quadratic_form, schur_psi_form)
from lattice.model import ModelSpec
from utils.exceptions import SingularModeError
from utils.logger import IsingLabLogger
from utils.reporting import compensated_sum, write_csv

logger = IsingLabLogger("isinglab.propagators")

FFT_CROSSOVER = 16
COMPENSATED_SIDE = 64
SINGULAR_TOL = 1e-12

Offset = Tuple[int, int]


@dataclass(frozen=True)
class LatticeField:
    """Matrix-valued function of a torus offset with twisted periodicity."""

    values: np.ndarray
    M: int
    a: float
    alpha: Alpha
    name: str = "field"

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    def at(self, offset: Offset) -> np.ndarray:
        sign = 1
        cell = []
        for n, s in zip(offset, self.alpha):
            q, r = divmod(int(n), self.M)
            if q % 2 and s < 0:
                sign = -sign
            cell.append(r)
        return sign * self.values[cell[0], cell[1]]

    def antisymmetry_defect(self) -> float:
        """max over offsets of |g(x) + g(-x)^T|."""
        worst = 0.0
        for n1 in range(self.M):
            for n2 in range(self.M):
                d = self.at((n1, n2)) + self.at((-n1, -n2)).T
                worst = max(worst, float(np.max(np.abs(d))))
        return worst

    def rows(self):
        for n1 in range(self.M):
            for n2 in range(self.M):
                g = self.values[n1, n2]
                row = [n1, n2]
                for i in range(self.dim):
                    for j in range(self.dim):
                        row.extend([float(g[i, j].real), float(g[i, j].imag)])
                yield row

    def header(self):
        cols = ["x1", "x2"]
        for i in range(self.dim):
            for j in range(self.dim):
                cols.extend([f"re_{i}{j}", f"im_{i}{j}"])
        return cols

    def write_csv(self, path: Union[str, Path]) -> Path:
        return write_csv(path, self.header(), self.rows())


class Propagator2x2Field(LatticeField):
    """g^psi, g^chi and the single-scale and dressed propagators, indexed by (omega, omega')."""


def _singular_check(kernels: np.ndarray, grid: MomentumGrid, name: str) -> None:
    sv = np.linalg.svd(kernels.reshape(-1, *kernels.shape[-2:]), compute_uv=False)
    top = float(np.max(sv))
    low = float(np.min(sv))
    if top == 0.0 or low <= SINGULAR_TOL * top:
        cond = math.inf if low == 0.0 else top / low
        raise SingularModeError(
            f"massless {alpha_label(grid.alpha)} mode: {name} form is singular on the grid",
            alpha=grid.alpha, condition_number=cond)


def _inverse_on_grid(form: Callable, spec: ModelSpec, grid: MomentumGrid, name: str) -> np.ndarray:
    K1, K2 = grid.mesh()
    kernels = form(spec, np.stack([K1, K2], axis=-1))
    _singular_check(kernels, grid, name)
    return np.linalg.inv(kernels)


def momentum_sum_field(kernel: np.ndarray, grid: MomentumGrid, prefactor: complex,
                       fft_crossover: int = FFT_CROSSOVER) -> np.ndarray:
    """
    F(n) = prefactor * sum_k e^{-i k . a n} kernel(k) for every n in the fundamental cell.

    On the shifted grid this is an FFT in n followed by the phase e^{-2 pi i delta.n / M}.
    """
    M = grid.M
    d1, d2 = grid.shifts
    m = np.arange(M)
    phase = np.exp(-2j * math.pi * (d1 * m[:, None] + d2 * m[None, :]) / M)
    if M >= fft_crossover:
        transformed = np.fft.fft2(kernel, axes=(0, 1))
    else:
        w = np.exp(-2j * math.pi * np.outer(m, m) / M)
        transformed = np.einsum("ap,bq,pq...->ab...", w, w, kernel)
    return prefactor * phase[:, :, None, None] * transformed


def momentum_sum_at(kernel: np.ndarray, grid: MomentumGrid, prefactor: complex, offset: Offset) -> np.ndarray:
    """Single-offset momentum sum, with compensated accumulation on large grids."""
    K1, K2 = grid.mesh()
    phase = np.exp(-1j * grid.a * (K1 * offset[0] + K2 * offset[1]))
    terms = phase[:, :, None, None] * kernel
    if grid.M >= COMPENSATED_SIDE:
        dim = kernel.shape[-1]
        out = np.empty((dim, dim), dtype=complex)
        for i in range(dim):
            for j in range(dim):
                out[i, j] = compensated_sum(complex(v) for v in terms[:, :, i, j].ravel())
        return prefactor * out
    return prefactor * terms.sum(axis=(0, 1))


def _mode_propagator_field(spec: ModelSpec, alpha, form: Callable, name: str,
                           fft_crossover: int) -> Propagator2x2Field:
    grid = MomentumGrid(spec.M, parse_alpha(alpha), spec.a)
    inverse = _inverse_on_grid(form, spec, grid, name)
    values = momentum_sum_field(inverse, grid, 2 * math.pi / grid.L ** 2, fft_crossover)
    return Propagator2x2Field(values, spec.M, spec.a, grid.alpha, name)


def _psi_form_choice(use_correction: bool, tc_lambda: Optional[float]):
    if not use_correction:
        return psi_form, "psi"
    if tc_lambda is None:
        return schur_psi_form, "psi-corrected"
    return (lambda spec, k: corrected_form(spec, k, tc_lambda)), "psi-sigma"


def psi_propagator_field(spec: ModelSpec, alpha=(-1, -1), use_correction: bool = False,
                         tc_lambda: Optional[float] = None, fft_crossover: int = FFT_CROSSOVER) -> Propagator2x2Field:
    """
    g^psi(x) = (2 pi / L^2) sum_k e^{-ik.x} C_psi(k)^{-1} on the whole torus.

    With ``use_correction`` the inverse of C_psi - Q C_chi^{-1} Q is used
    (the exact psi marginal), or of C_sigma(k) when a shifted critical point
    t_c(lambda) is given.
    """
    form, name = _psi_form_choice(use_correction, tc_lambda)
    return _mode_propagator_field(spec, alpha, form, name, fft_crossover)


def psi_propagator(spec: ModelSpec, x: Offset, alpha=(-1, -1), use_correction: bool = False,
                   tc_lambda: Optional[float] = None, fft_crossover: int = FFT_CROSSOVER) -> np.ndarray:
    """g^psi at one lattice offset x (in units of a)."""
    if spec.M >= fft_crossover:
        return psi_propagator_field(spec, alpha, use_correction, tc_lambda, fft_crossover).at(x)
    grid = MomentumGrid(spec.M, parse_alpha(alpha), spec.a)
    form, name = _psi_form_choice(use_correction, tc_lambda)
    inverse = _inverse_on_grid(form, spec, grid, name)
    return momentum_sum_at(inverse, grid, 2 * math.pi / grid.L ** 2, x)


def chi_propagator_field(spec: ModelSpec, alpha=(-1, -1), fft_crossover: int = FFT_CROSSOVER) -> Propagator2x2Field:
    return _mode_propagator_field(spec, alpha, chi_form, "chi", fft_crossover)


def chi_propagator(spec: ModelSpec, x: Offset, alpha=(-1, -1), fft_crossover: int = FFT_CROSSOVER) -> np.ndarray:
    if spec.M >= fft_crossover:
        return chi_propagator_field(spec, alpha, fft_crossover).at(x)
    grid = MomentumGrid(spec.M, parse_alpha(alpha), spec.a)
    inverse = _inverse_on_grid(chi_form, spec, grid, "chi")
    return momentum_sum_at(inverse, grid, 2 * math.pi / grid.L ** 2, x)


def chi_local_weight(spec: ModelSpec) -> np.ndarray:
    """
    a^{-1} sum_x a^2 g^chi(x) on the periodic grid.

    Only k = 0 survives the spatial sum, so this is (2 pi / a) C_chi(0)^{-1}
    = -(2 pi / (a sigma_chi(0))) sigma_2, independent of M.
    """
    field = chi_propagator_field(spec, (1, 1))
    return spec.a * field.values.sum(axis=(0, 1))


def phi_propagator_field(spec: ModelSpec, alpha=(-1, -1), fft_crossover: int = FFT_CROSSOVER) -> LatticeField:
    """
    <Phi_{x,i} Phi_{y,j}> = -(1/(2 M^2)) sum_k e^{-ik(x-y)} [C(k)^{-1}]_ij in lattice units.

    The lattice action is taken at unit spacing; for spacing a the
    propagator is this one divided by a.
    """
    unit = spec.with_updates(a=1.0)
    grid = MomentumGrid(spec.M, parse_alpha(alpha), 1.0)
    inverse = _inverse_on_grid(quadratic_form, unit, grid, "Phi")
    values = momentum_sum_field(inverse, grid, -0.5 / spec.M ** 2, fft_crossover)
    return LatticeField(values, spec.M, 1.0, grid.alpha, "phi")


# position-space action

COMPONENTS = {"Hbar": 0, "H": 1, "Vbar": 2, "V": 3}

_SITE_BLOCK = np.array([
    [0.0, 1.0, -1.0, -1.0],
    [-1.0, 0.0, 1.0, -1.0],
    [1.0, -1.0, 0.0, 1.0],
    [1.0, 1.0, -1.0, 0.0],
])


def generator_index(site: Offset, component: int, M: int) -> int:
    """Index of the Phi generator at a site, wrapped into the cell."""
    return 4 * ((site[0] % M) * M + site[1] % M) + component


def twisted_generator(site: Offset, component: int, spec: ModelSpec, alpha: Alpha) -> Tuple[int, int]:
    """Index of Phi at an unwrapped site and the sign picked up by wrapping it into the cell."""
    sign = 1
    for n, s in zip(site, alpha):
        if (n // spec.M) % 2 and s < 0:
            sign = -sign
    return generator_index(site, component, spec.M), sign


def phi_action_matrix(spec: ModelSpec, alpha=(-1, -1)) -> np.ndarray:
    """
    Antisymmetric A with S = -1/2 Phi^T A Phi for the unit-spacing action

        S = sum_x [t (Hbar_x H_{x+e1} + Vbar_x V_{x+e2}) + Hbar H + Vbar V
                   + Vbar Hbar + V Hbar + H Vbar + V H]

    with wrap bonds multiplied by alpha_i. Generators are ordered by site
    x1 * M + x2 and then (Hbar, H, Vbar, V).
    """
    alpha = parse_alpha(alpha)
    M = spec.M
    t = spec.t
    n = 4 * M * M
    B = np.zeros((n, n))
    for x1 in range(M):
        for x2 in range(M):
            base = 4 * (x1 * M + x2)
            B[base:base + 4, base:base + 4] += _SITE_BLOCK
            for comp_from, comp_to, step in ((0, 1, (1, 0)), (2, 3, (0, 1))):
                i = generator_index((x1, x2), comp_from, M)
                j, sign = twisted_generator((x1 + step[0], x2 + step[1]), comp_to, spec, alpha)
                B[i, j] += t * sign
                B[j, i] -= t * sign
    return -B


def bond_generators(bond, spec: ModelSpec, alpha: Alpha) -> Tuple[int, int, int]:
    """(i, j, sign) with E_b = sign * theta_i theta_j for the bond's Hbar H (or Vbar V) bilinear."""
    x = bond.x
    if bond.j == 1:
        i = generator_index(x, COMPONENTS["Hbar"], spec.M)
        j, sign = twisted_generator((x[0] % spec.M + 1, x[1] % spec.M), COMPONENTS["H"], spec, alpha)
    else:
        i = generator_index(x, COMPONENTS["Vbar"], spec.M)
        j, sign = twisted_generator((x[0] % spec.M, x[1] % spec.M + 1), COMPONENTS["V"], spec, alpha)
    return i, j, sign


def mode_propagator_from_phi(spec: ModelSpec, phi_propagator: np.ndarray) -> np.ndarray:
    """Map a Phi-basis propagator (4M^2 square, unit spacing) to the (psi_+, psi_-, chi_+, chi_-) basis at spacing a."""
    T = modes_from_phi(spec)
    sites = spec.M * spec.M
    big = np.kron(np.eye(sites), T)
    return big @ phi_propagator @ big.T / spec.a


def psi_block(mode_propagator: np.ndarray, M: int, x: Offset, y: Offset) -> np.ndarray:
    """The 2x2 (psi_omega at x, psi_omega' at y) block of a mode-basis propagator."""
    sx = 4 * ((x[0] % M) * M + x[1] % M)
    sy = 4 * ((y[0] % M) * M + y[1] % M)
    return mode_propagator[sx:sx + 2, sy:sy + 2]


def decay_profile(field: LatticeField, offsets: Sequence[Offset]) -> np.ndarray:
    """Frobenius norms of the field along the given offsets."""
    return np.array([float(np.linalg.norm(field.at(o))) for o in offsets])
