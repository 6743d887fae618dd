"""
Continuum Dirac propagator of the scaling limit.

    g(x) = Zbar int dk/(2 pi) e^{-ik.x} / (k^2 + m^2) [[i k1 + k2, i m], [-i m, i k1 - k2]],  m = Zstar m*

Closed form: g_{++} = |m| K1(|m| r)(x1 - i x2)/r, g_{--} = |m| K1(|m| r)(x1 + i x2)/r,
g_{+-} = -g_{-+} = i m K0(|m| r). At m = 0 the diagonal reduces to 1/(x1 +- i x2).
"""

import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate, special

from utils.exceptions import GeometryError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.scaling")

Point = Tuple[float, float]

RENORMALIZATION_WINDOW = (0.5, 1.5)


class ContinuumParams(BaseModel):
    """Effective mass, the finite renormalizations Zbar and Zstar, the lattice mass sigma(a) and t_c(lambda)."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    m_star: float = 0.0
    Zbar: float = Field(1.0, gt=RENORMALIZATION_WINDOW[0], lt=RENORMALIZATION_WINDOW[1])
    Zstar: float = Field(1.0, gt=RENORMALIZATION_WINDOW[0], lt=RENORMALIZATION_WINDOW[1])
    sigma_a: Optional[float] = None
    lam: float = Field(0.0, alias="lambda")
    tc: Optional[float] = Field(None, gt=0.0, lt=1.0, description="t_c(lambda); t_c(0) when omitted")
    provenance: str = "free"

    @model_validator(mode="before")
    @classmethod
    def _default_sigma(cls, data):
        if isinstance(data, dict) and data.get("sigma_a") is None:
            data = dict(data)
            data["sigma_a"] = data.get("m_star", 0.0)
        return data

    @model_validator(mode="after")
    def _check(self):
        if self.lam == 0.0 and (self.Zbar != 1.0 or self.Zstar != 1.0):
            raise ValueError("lambda = 0 forces Zbar = Zstar = 1")
        return self

    @property
    def dressed_mass(self) -> float:
        return self.Zstar * self.m_star

    def with_updates(self, **changes) -> "ContinuumParams":
        data = self.model_dump(by_alias=False)
        data.update(changes)
        return ContinuumParams(**data)


def _check_point(x: Point) -> Tuple[float, float, float]:
    x1, x2 = float(x[0]), float(x[1])
    r = math.hypot(x1, x2)
    if r == 0.0:
        raise GeometryError("the propagator needs non-coinciding points, got x = 0")
    return x1, x2, r


def _assemble(x1: float, x2: float, diagonal: float, off: float, mass: float, Z: float) -> np.ndarray:
    """diagonal multiplies (x1 -+ i x2); off multiplies i m."""
    return Z * np.array([
        [diagonal * (x1 - 1j * x2), 1j * mass * off],
        [-1j * mass * off, diagonal * (x1 + 1j * x2)],
    ])


def _mass_and_scale(params: ContinuumParams, dressed: bool) -> Tuple[float, float]:
    if dressed:
        return params.dressed_mass, params.Zbar
    return params.m_star, 1.0


def proper_time_integrals(r: float, mass: float) -> Tuple[float, float]:
    """
    I0 = int_0^inf ds e^{-m^2 s - r^2/(4s)} / (2s) and I1 = the same with 1/(4 s^2).

    Obtained by Gaussian momentum integration after writing 1/(k^2 + m^2) as
    a proper-time integral; I0 = K0(|m| r), I1 = |m| K1(|m| r) / r.
    """
    m2 = mass * mass
    peak = r / (2.0 * abs(mass)) if mass != 0.0 else 0.25 * r * r
    u_peak = math.log(peak)

    def weight(u):
        if abs(u) > 700.0:
            return 0.0
        return math.exp(-m2 * math.exp(u) - 0.25 * r * r * math.exp(-u))

    def f0(u):
        return 0.5 * weight(u)

    def f1(u):
        w = weight(u)
        return 0.25 * w * math.exp(-u) if w else 0.0

    def split_quad(f):
        left, _ = integrate.quad(f, -np.inf, u_peak, epsabs=0.0, epsrel=1e-13, limit=200)
        right, _ = integrate.quad(f, u_peak, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
        return left + right

    I0 = math.inf if mass == 0.0 else split_quad(f0)
    return I0, split_quad(f1)


def continuum_propagator_quadrature(x: Point, params: ContinuumParams, dressed: bool = True) -> np.ndarray:
    """The propagator from the proper-time quadrature, independent of Bessel routines."""
    x1, x2, r = _check_point(x)
    mass, Z = _mass_and_scale(params, dressed)
    I0, I1 = proper_time_integrals(r, mass)
    return _assemble(x1, x2, I1, 0.0 if mass == 0.0 else I0, mass, Z)


def continuum_propagator(x: Point, params: ContinuumParams, dressed: bool = True) -> np.ndarray:
    """
    2x2 propagator g(x) indexed by (omega, omega') in (+, -).

    Args:
        x: non-zero point of the plane
        params: mass and renormalizations
        dressed: use Zbar and Zstar m*; otherwise the bare g^0 with mass m*
    """
    x1, x2, r = _check_point(x)
    mass, Z = _mass_and_scale(params, dressed)
    if mass == 0.0:
        return _assemble(x1, x2, 1.0 / (r * r), 0.0, 0.0, Z)
    mu = abs(mass)
    k0 = float(special.k0(mu * r))
    k1 = float(special.k1(mu * r))
    if not (math.isfinite(k0) and math.isfinite(k1)):
        logger.warning(f"Bessel evaluation failed at |m| r = {mu * r:.3g}, using quadrature")
        return continuum_propagator_quadrature(x, params, dressed)
    return _assemble(x1, x2, mu * k1 / r, k0, mass, Z)

