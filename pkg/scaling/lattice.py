"""
Infinite-volume lattice propagators at spacing a.

In lattice momenta p = a k the dressed propagator reads

    g^(a)(x) = (Zbar / a) int_{[-pi, pi]^2} dp/(2 pi) e^{-ip.n} [[D^+, i s], [-i s, D^-]] / (|D|^2 + s^2)

with D^{+-} = i sin p1 +- sin p2, s = cos p1 + cos p2 - 2 + a Zstar sigma(a)
and x = a n. The denominator is affine in cos p2, so the p2 integral is done
in closed form and only p1 is left to adaptive quadrature. The Phi-basis
propagator of the nearest-neighbour action is treated the same way, with the
Laurent coefficients of det C and adj C in e^{ip2} read off a three-point
transform.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy import integrate

from free_fermion.correlations import bond_propagator_matrix
from free_fermion.momentum import quadratic_form
from grassmann.wick import bilinear_truncated_expectation
from lattice.model import BondIndex, ModelSpec
from scaling.continuum import ContinuumParams, Point
from utils.exceptions import GeometryError, ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.scaling")

Offset = Tuple[int, int]

GRID_TOL = 1e-9
QUAD_LIMIT = 2000
DEFAULT_GRID_POINTS = 256
ENDPOINT_SHIFT = 1e-12


def lattice_offset(x: Point, a: float) -> Offset:
    """n with x = a n; raises GeometryError off the grid."""
    n = []
    for c in x:
        v = float(c) / a
        r = round(v)
        if abs(v - r) > GRID_TOL * max(1.0, abs(v)):
            raise GeometryError(f"point {tuple(x)} is not on the grid of spacing {a}")
        n.append(int(r))
    return n[0], n[1]


# dressed propagator


@dataclass(frozen=True)
class _WilsonCoefficients:
    """p2-Fourier data of 1 / (A + 2B cos p2) at fixed p1."""

    s1: float
    r: float
    delta: float
    one_minus_r: float
    one_plus_r: float
    one_plus_B: float

    def c(self, n: int) -> float:
        return self.r ** abs(n) / self.delta

    def odd(self, n: int) -> float:
        """c_{n-1} - c_{n+1}."""
        if n == 0:
            return 0.0
        k = abs(n)
        value = self.r ** (k - 1) * self.one_minus_r * self.one_plus_r / self.delta
        return value if n > 0 else -value

    def mass_part(self, n: int) -> float:
        """B c_n + (c_{n-1} + c_{n+1}) / 2."""
        k = abs(n)
        if k == 0:
            return (self.one_plus_B - self.one_minus_r) / self.delta
        return self.r ** (k - 1) * (0.5 * self.one_minus_r ** 2 + self.r * self.one_plus_B) / self.delta


def _wilson_coefficients(p1: float, mu: float) -> _WilsonCoefficients:
    s1 = math.sin(p1)
    one_plus_B = mu - 2.0 * math.sin(0.5 * p1) ** 2
    B = one_plus_B - 1.0
    A = 1.0 + s1 * s1 + B * B
    lower = s1 * s1 + (1.0 - abs(B)) ** 2
    if lower == 0.0:
        # massless endpoint p1 = 0: the integrands have finite limits
        return _wilson_coefficients(p1 + ENDPOINT_SHIFT, mu)
    upper = s1 * s1 + (1.0 + abs(B)) ** 2
    delta = math.sqrt(lower * upper)
    norm = A + delta
    r = -2.0 * B / norm
    one_minus_r = (s1 * s1 + one_plus_B ** 2 + delta) / norm
    one_plus_r = (s1 * s1 + (1.0 - B) ** 2 + delta) / norm
    return _WilsonCoefficients(s1, r, delta, one_minus_r, one_plus_r, one_plus_B)


def _oscillatory(f, n1: int, kind: str) -> float:
    """int_0^pi f(p) cos(n1 p) (or sin) dp."""
    if n1 == 0:
        if kind == "sin":
            return 0.0
        value, _ = integrate.quad(f, 0.0, math.pi, epsabs=1e-14, epsrel=1e-11, limit=QUAD_LIMIT)
        return value
    sign = 1.0 if (kind == "cos" or n1 > 0) else -1.0
    value, _ = integrate.quad(f, 0.0, math.pi, weight=kind, wvar=abs(n1),
                              epsabs=1e-14, epsrel=1e-11, limit=QUAD_LIMIT)
    return sign * value


def unit_wilson_propagator(n: Offset, mu: float) -> np.ndarray:
    """Lattice-unit propagator at offset n with mass term mu = a Zstar sigma(a)."""
    n1, n2 = n

    def diag_real(p):
        w = _wilson_coefficients(p, mu)
        return w.s1 * w.c(n2)

    def diag_imag(p):
        return _wilson_coefficients(p, mu).odd(n2)

    def off(p):
        return _wilson_coefficients(p, mu).mass_part(n2)

    Js = _oscillatory(diag_real, n1, "sin")
    Jd = _oscillatory(diag_imag, n1, "cos")
    Jo = _oscillatory(off, n1, "cos")
    return np.array([[2.0 * Js - 1j * Jd, 2j * Jo], [-2j * Jo, 2.0 * Js + 1j * Jd]])


def unit_wilson_propagator_grid(n: Offset, mu: float, points: int) -> np.ndarray:
    """Midpoint rule on a points x points grid; equals the antiperiodic torus of side ``points``."""
    p = 2.0 * math.pi * (np.arange(points) + 0.5) / points
    P1, P2 = np.meshgrid(p, p, indexing="ij")
    s1, s2 = np.sin(P1), np.sin(P2)
    s = np.cos(P1) + np.cos(P2) - 2.0 + mu
    den = s1 ** 2 + s2 ** 2 + s ** 2
    phase = np.exp(-1j * (P1 * n[0] + P2 * n[1])) / den
    scale = 2.0 * math.pi / points ** 2
    gpp = scale * np.sum(phase * (1j * s1 + s2))
    gmm = scale * np.sum(phase * (1j * s1 - s2))
    gpm = scale * np.sum(phase * 1j * s)
    return np.array([[gpp, gpm], [-gpm, gmm]])


@dataclass
class GridEstimate:
    value: np.ndarray
    coarse: np.ndarray
    fine: np.ndarray

    @property
    def error(self) -> float:
        return float(np.max(np.abs(self.fine - self.coarse)))


def richardson_grid_propagator(n: Offset, mu: float, points: int = DEFAULT_GRID_POINTS) -> GridEstimate:
    """Grid sums at P and 2P combined for a 1/P^2 leading error."""
    coarse = unit_wilson_propagator_grid(n, mu, points)
    fine = unit_wilson_propagator_grid(n, mu, 2 * points)
    return GridEstimate((4.0 * fine - coarse) / 3.0, coarse, fine)


def dressed_lattice_propagator(x: Point, spec: ModelSpec, params: ContinuumParams, method: str = "quadrature",
                               grid_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """
    g^(a)(x) on the infinite lattice of spacing spec.a.

    Args:
        x: non-zero grid point in physical units
        spec: supplies the spacing
        params: Zbar, Zstar and sigma(a)
        method: 'quadrature' (closed p2 integral) or 'grid' (Richardson-checked momentum grid)
        grid_points: coarse grid side for the 'grid' method
    """
    n = lattice_offset(x, spec.a)
    if n == (0, 0):
        raise GeometryError("the propagator needs non-coinciding points, got x = 0")
    mu = spec.a * params.Zstar * params.sigma_a
    if method == "quadrature":
        unit = unit_wilson_propagator(n, mu)
    elif method == "grid":
        estimate = richardson_grid_propagator(n, mu, grid_points)
        logger.debug(f"grid propagator at n = {n}: Richardson spread {estimate.error:.3e}")
        unit = estimate.value
    else:
        raise ValidationError(f"unknown propagator method {method!r}")
    return params.Zbar * unit / spec.a


# Phi-basis propagator of the nearest-neighbour action

_ZETA = np.exp(1j * math.pi / 3)
_OMEGA3 = np.exp(2j * math.pi / 3)
_SAMPLE_P2 = math.pi / 3 + 2 * math.pi * np.arange(3) / 3


def _laurent(values: np.ndarray) -> Dict[int, np.ndarray]:
    """Coefficients f_l, l in (-1, 0, 1), of f(w) = sum_l f_l w^l from samples at w_s = zeta omega^s."""
    out = {}
    for l in (-1, 0, 1):
        phases = _OMEGA3 ** (-l * np.arange(3))
        out[l] = _ZETA ** (-l) * np.tensordot(phases, values, axes=(0, 0)) / 3.0
    return out


def _inverse_det_coefficients(d: Dict[int, complex]):
    """Roots w1 (inside) and w2 (outside the unit circle) of d1 w^2 + d0 w + d_{-1}, with the partial fractions."""
    d1, d0, dm = d[1], d[0], d[-1]
    disc = np.sqrt(d0 * d0 - 4.0 * d1 * dm)
    q = -0.5 * (d0 + disc) if abs(d0 + disc) >= abs(d0 - disc) else -0.5 * (d0 - disc)
    roots = sorted([q / d1, dm / q], key=abs)
    w1, w2 = roots
    P = w1 / (w1 - w2)
    Q = w2 / (w2 - w1)
    return d1, w1, w2, P, Q


def _inverse_det_fourier(j: np.ndarray, d1, w1, w2, P, Q) -> np.ndarray:
    """Coefficients of w^j of 1 / det on the unit circle."""
    out = np.empty(j.shape, dtype=complex)
    inner = j <= -1
    out[inner] = P / d1 * w1 ** (-j[inner] - 1)
    out[~inner] = -Q / d1 * w2 ** (-j[~inner] - 1)
    return out


@dataclass
class InfiniteLatticeField:
    """Phi propagator of the infinite lattice at unit spacing, tabulated on requested offsets."""

    spec: ModelSpec
    values: Dict[Offset, np.ndarray] = field(default_factory=dict)

    def at(self, offset: Offset) -> np.ndarray:
        key = (int(offset[0]), int(offset[1]))
        if key not in self.values:
            self.extend([key])
        return self.values[key]

    def extend(self, offsets: Iterable[Offset]) -> None:
        missing = sorted({(int(o[0]), int(o[1])) for o in offsets} - set(self.values))
        if missing:
            self.values.update(infinite_phi_propagator(self.spec, missing))


def infinite_phi_propagator(spec: ModelSpec, offsets: Sequence[Offset]) -> Dict[Offset, np.ndarray]:
    """
    <Phi_{x,i} Phi_{x-n,j}> = -(1/2) int dp/(2 pi)^2 e^{-ip.n} [C(p)^{-1}]_ij for every offset n.

    One vector-valued adaptive quadrature over p1 serves all offsets.
    """
    unit = spec.with_updates(a=1.0)
    offsets = [tuple(int(c) for c in o) for o in offsets]
    n1 = np.array([o[0] for o in offsets], dtype=float)
    n2 = np.array([o[1] for o in offsets])
    shifts = n2[:, None] - np.array([-1, 0, 1])[None, :]
    count = len(offsets)

    def integrand(p1: float) -> np.ndarray:
        k = np.stack([np.full(3, p1), _SAMPLE_P2], axis=-1)
        C = quadratic_form(unit, k)
        det = np.linalg.det(C)
        adj = det[:, None, None] * np.linalg.inv(C)
        d = _laurent(det)
        A = _laurent(adj)
        stacked = np.stack([A[-1], A[0], A[1]])
        E = _inverse_det_fourier(shifts.ravel(), *_inverse_det_coefficients(d)).reshape(count, 3)
        out = np.einsum("il,lab->iab", E, stacked)
        out *= np.exp(-1j * p1 * n1)[:, None, None]
        return np.concatenate([out.real.ravel(), out.imag.ravel()])

    values, err = integrate.quad_vec(integrand, -math.pi, math.pi, epsabs=1e-14, epsrel=1e-11,
                                     points=(0.0,), norm="max", limit=QUAD_LIMIT)
    logger.debug(f"infinite-volume Phi propagator on {count} offsets, quadrature error {err:.2e}")
    half = values.size // 2
    G = (values[:half] + 1j * values[half:]).reshape(count, 4, 4) * (-1.0 / (4.0 * math.pi))
    return {o: G[i] for i, o in enumerate(offsets)}


def _endpoint_offsets(bonds: Sequence[BondIndex]) -> List[Offset]:
    sites = []
    for b in bonds:
        sites.append(b.x)
        sites.append((b.x[0] + 1, b.x[1]) if b.j == 1 else (b.x[0], b.x[1] + 1))
    return [(p[0] - q[0], p[1] - q[1]) for p in sites for q in sites]


def infinite_lattice_energy_correlation(spec: ModelSpec, points: Sequence[Point], j_labels: Sequence[int],
                                        field: InfiniteLatticeField = None) -> float:
    """
    <eps_{x1,j1}; ...; eps_{xm,jm}> of the nearest-neighbour model on the infinite lattice, divided by a^m.

    Points are in physical units on the grid of spacing spec.a.
    """
    if spec.lam != 0.0:
        raise ValidationError("infinite-volume lattice correlations are exact only at lambda = 0")
    if len(points) != len(j_labels):
        raise ValidationError("one bond direction per point is required")
    bonds = [BondIndex(lattice_offset(x, spec.a), int(j)) for x, j in zip(points, j_labels)]
    if len(set(bonds)) != len(bonds):
        raise GeometryError("energy correlations need distinct bonds")
    if field is None:
        field = InfiniteLatticeField(spec)
    field.extend(_endpoint_offsets(bonds))
    G = bond_propagator_matrix(bonds, field)
    m = len(bonds)
    bilinears = [[(1.0, 2 * i, 2 * i + 1)] for i in range(m)]
    kappa = bilinear_truncated_expectation(bilinears, G)
    t = spec.t
    value = t + (1 - t * t) * kappa if m == 1 else (1 - t * t) ** m * kappa
    return float(value.real) / spec.a ** m
