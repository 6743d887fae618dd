"""
Localization of quadratic kernels and of the source kernel.

A quadratic kernel K(k, sigma) on scale h is reduced to its value and first
lattice derivative at k = 0, which for symmetric kernels take the form

    L K(k) = (1/4 pi) [[zeta D^-, -i s], [i s, zeta D^+]] + 2^h nu sigma_2

with D^{+-} = i d_1 +- d_2 and d(k) = a^{-1}(sin a k1, sin a k2). The constant
is split into the part linear in sigma (s, from P_1) and the sigma-independent
part (nu, from P_0); both projections use the kernel at sigma and 2 sigma.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from free_fermion.momentum import SIGMA2
from free_fermion.symmetry import energy_bilinear
from lattice.model import ModelSpec
from utils.exceptions import LocalizationError, ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.rg")

LOCALIZATION_TOL = 1e-8

QuadraticKernel = Callable[[np.ndarray, float], np.ndarray]


def _symbols(k: np.ndarray, a: float):
    k = np.asarray(k, dtype=float)
    s1, s2 = np.sin(a * k[..., 0]), np.sin(a * k[..., 1])
    return (1j * s1 + s2) / a, (1j * s1 - s2) / a


@dataclass(frozen=True)
class LocalizedKernel:
    """Local part (zeta, s, nu) of a kernel on scale h at mass sigma, with the kernel itself."""

    zeta: float
    s: float
    nu: float
    h: int
    sigma: float
    a: float
    kernel: QuadraticKernel

    def local(self, k, sigma: Optional[float] = None) -> np.ndarray:
        """L K(k) at mass sigma; s scales linearly with the mass."""
        sigma = self.sigma if sigma is None else sigma
        dp, dm = _symbols(k, self.a)
        mass = self.s * sigma / self.sigma / (4 * math.pi) + 2.0 ** self.h * self.nu
        diag = self.zeta / (4 * math.pi)
        zero = np.zeros_like(dp)
        out = np.stack([np.stack([diag * dm, zero], axis=-1), np.stack([zero, diag * dp], axis=-1)], axis=-2)
        return out + mass * SIGMA2

    def remainder(self, k, sigma: Optional[float] = None) -> np.ndarray:
        sigma = self.sigma if sigma is None else sigma
        return self.kernel(np.asarray(k, dtype=float), sigma) - self.local(k, sigma)

    def local_part(self) -> QuadraticKernel:
        return lambda k, sigma: self.local(k, sigma)

    def remainder_part(self) -> QuadraticKernel:
        return lambda k, sigma: self.remainder(k, sigma)


def _scale_of(*arrays) -> float:
    return max(1.0, *(float(np.max(np.abs(x))) for x in arrays))


def localize_quadratic(kernel: QuadraticKernel, h: int, sigma: float, a: float, M: int,
                       tol: float = LOCALIZATION_TOL) -> LocalizedKernel:
    """
    Split a quadratic kernel into zeta_h, s_h, the nu contribution and the remainder.

    The kernel is sampled on the periodic grid of side L = M a, which contains
    k = 0; derivatives along d are central differences at k = +-2 pi / L,
    exact for kernels of the local form.

    Args:
        kernel: K(k, sigma) returning 2x2 matrices for momenta of shape (..., 2)
        h: scale of the kernel
        sigma: mass at which the kernel is split; must be non-zero
        a: lattice spacing
        M: grid side

    Raises:
        LocalizationError: K(k) != -K(-k)^T, or the local part is not of the two-real-parameter form
    """
    if sigma == 0.0:
        raise ValidationError("localization splits the mass dependence at sigma != 0")
    step = 2 * math.pi / (M * a)
    e1, e2 = np.array([step, 0.0]), np.array([0.0, step])
    zero = np.zeros(2)
    K0 = np.asarray(kernel(zero, sigma), dtype=complex)
    K0_double = np.asarray(kernel(zero, 2 * sigma), dtype=complex)
    plus1, minus1 = kernel(e1, sigma), kernel(-e1, sigma)
    plus2, minus2 = kernel(e2, sigma), kernel(-e2, sigma)
    scale = _scale_of(K0, plus1, plus2)

    antisymmetry = max(float(np.max(np.abs(K0 + K0.T))), float(np.max(np.abs(plus1 + minus1.T))),
                       float(np.max(np.abs(plus2 + minus2.T))))
    if antisymmetry > tol * scale:
        raise LocalizationError(f"kernel is not antisymmetric: defect {antisymmetry:.3e}")

    d_step = math.sin(a * step) / a
    d1 = (plus1 - minus1) / (2 * d_step)
    d2 = (plus2 - minus2) / (2 * d_step)
    zeta = -4j * math.pi * d1[0, 0]
    model1 = zeta / (4 * math.pi) * np.array([[1j, 0.0], [0.0, 1j]])
    model2 = zeta / (4 * math.pi) * np.array([[-1.0, 0.0], [0.0, 1.0]])
    p1 = K0_double - K0
    p0 = 2 * K0 - K0_double
    s = 4j * math.pi * p1[0, 1]
    trace = np.trace(SIGMA2 @ p0)
    residual = max(float(np.max(np.abs(d1 - model1))), float(np.max(np.abs(d2 - model2))),
                   float(np.max(np.abs(np.diag(K0)))), float(np.max(np.abs(p1 - p1[1, 0] / 1j * SIGMA2))))
    if residual > tol * scale:
        raise LocalizationError(f"local part is not of the two-parameter form: residual {residual:.3e}")
    for name, value in (("zeta", zeta), ("s", s), ("Tr sigma_2 P0 K", trace)):
        if abs(value.imag) > tol * scale:
            raise LocalizationError(f"{name} = {value:.6g} is not real")
    nu = 2.0 ** (-h - 1) * float(trace.real)
    logger.debug(f"scale {h}: zeta = {zeta.real:.6g}, s = {s.real:.6g}, nu = {nu:.6g}")
    return LocalizedKernel(float(zeta.real), float(s.real), nu, h, float(sigma), float(a), kernel)


def counterterm_on_scale(nu: float, kernel: QuadraticKernel, N: int, sigma: float, M: int) -> float:
    """nu_N = nu + 2^{-N-1} Tr[sigma_2 P_0 K(0)] for the kernel produced by integrating chi."""
    return nu + localize_quadratic(kernel, N, sigma, 2.0 ** -N, M).nu


SourceKernel = Union[np.ndarray, Callable[[float], np.ndarray]]


def localize_source(kernel: SourceKernel, sigma: Optional[float] = None, tol: float = LOCALIZATION_TOL) -> float:
    """
    Z1 contribution of a source kernel W at zero external momenta.

    The local source term is (Z1 / 2 pi) A psi sigma_2 psi, so Z1 = pi Tr[sigma_2 W]
    with W antisymmetrized. A callable kernel is read as W(sigma) and projected
    with P_0 W = 2 W(sigma) - W(2 sigma).

    Raises:
        LocalizationError: the coefficient of psi sigma_2 psi is not real
    """
    if callable(kernel):
        if sigma is None or sigma == 0.0:
            raise ValidationError("a mass-dependent source kernel needs sigma != 0")
        W = 2 * np.asarray(kernel(sigma), dtype=complex) - np.asarray(kernel(2 * sigma), dtype=complex)
    else:
        W = np.asarray(kernel, dtype=complex)
    if W.shape != (2, 2):
        raise ValidationError(f"source kernel must be 2x2, got shape {W.shape}")
    W = 0.5 * (W - W.T)
    Z1 = math.pi * np.trace(SIGMA2 @ W)
    if abs(Z1.imag) > tol * max(1.0, abs(Z1)):
        raise LocalizationError(f"source coefficient {Z1:.6g} is not real")
    return float(Z1.real)


def energy_source_kernel(spec: ModelSpec, j: int = 1) -> np.ndarray:
    """(1 - t^2) times the antisymmetrized psi-psi block of the energy bilinear E_{x,j}."""
    t = spec.t
    B = energy_bilinear(spec, j)[:2, :2]
    return (1.0 - t * t) * 0.5 * (B - B.T)
