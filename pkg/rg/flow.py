"""
Running coupling flows and the fixed point for the counterterm nu.

The couplings evolve from scale N down to h_sigma by

    Z_{h-1} = Z_h + b^Z_h,          sigma_{h-1} = sigma_h (1 + b^sigma_h),
    nu_{h-1} = 2 nu_h + b^nu_h,     Z1_{h-1} = Z1_h (1 + b^{Z1}_h).

nu is relevant, so nu_N has to be tuned: the bounded solution is the fixed
point of (T nu)_h = -sum_{j <= h} 2^{j-h-1} b^nu_j(nu).
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Type

import numpy as np

from rg.scales import RGState
from utils.exceptions import ConfigurationError, ContractionError, FlowExitError, ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.rg")

DEFAULT_BOX = 0.5
FIXED_POINT_DEPTH = 80
FIXED_POINT_TOL = 1e-14
TAIL_TOL = 1e-10
MAX_ITERATIONS = 500


@dataclass(frozen=True)
class BetaValues:
    Z: float = 0.0
    sigma: float = 0.0
    nu: float = 0.0
    Z1: float = 0.0


class BetaFunction(ABC):
    """Beta function family: the increments on scale h given the couplings down to h."""

    name = "abstract"

    def __init__(self, **params):
        self.params = params

    @abstractmethod
    def __call__(self, h: int, state: RGState) -> BetaValues:
        pass


class ZeroBeta(BetaFunction):
    name = "zero"

    def __call__(self, h, state):
        return BetaValues()


class GeometricBeta(BetaFunction):
    """b^X_h = eps_X 2^{theta (h - N)} for each coupling X."""

    name = "geometric"

    def __init__(self, eps_Z: float = 0.0, eps_sigma: float = 0.0, eps_Z1: float = 0.0, c_nu: float = 0.0,
                 theta: float = 0.5, **params):
        super().__init__(**params)
        if not 0.0 < theta:
            raise ValidationError(f"decay exponent theta must be positive, got {theta}")
        self.eps = BetaValues(eps_Z, eps_sigma, c_nu, eps_Z1)
        self.theta = theta

    def __call__(self, h, state):
        w = 2.0 ** (self.theta * (h - state.N))
        return BetaValues(self.eps.Z * w, self.eps.sigma * w, self.eps.nu * w, self.eps.Z1 * w)


class TabulatedBeta(BetaFunction):
    """Per-scale values computed elsewhere, e.g. the one-loop source beta."""

    name = "tabulated"

    def __init__(self, Z1: Optional[Dict[int, float]] = None, Z: Optional[Dict[int, float]] = None, **params):
        super().__init__(**params)
        self.Z1 = dict(Z1 or {})
        self.Z = dict(Z or {})

    def __call__(self, h, state):
        return BetaValues(Z=self.Z.get(h, 0.0), Z1=self.Z1.get(h, 0.0))


class BetaFactory:
    """Factory for beta function families"""

    def __init__(self):
        self._families: Dict[str, Type[BetaFunction]] = {
            "zero": ZeroBeta,
            "geometric": GeometricBeta,
            "tabulated": TabulatedBeta,
        }

    def get_beta(self, family: str, **params) -> BetaFunction:
        """
        Get a beta function instance.

        Raises:
            ConfigurationError: If the family is not registered
        """
        beta_class = self._families.get(family)
        if not beta_class:
            raise ConfigurationError(f"Unsupported beta family: {family}")
        return beta_class(**params)

    def register_beta(self, family: str, beta_class: Type[BetaFunction]) -> None:
        self._families[family] = beta_class

    def list_families(self) -> List[str]:
        return list(self._families.keys())


def convergence_rate(values: Sequence[float]) -> float:
    """
    Exponential rate of the increments |X_{h-1} - X_h| as h decreases.

    values are ordered from scale N downwards; infinite when the sequence is constant.
    """
    steps = np.abs(np.diff(np.asarray(values, dtype=float)))
    positive = steps > 0.0
    if positive.sum() < 2:
        return math.inf
    depth = np.arange(len(steps))[positive]
    slope, _ = np.polyfit(depth, np.log2(steps[positive]), 1)
    return float(-slope)


@dataclass
class FlowReport:
    """A trajectory with its box and convergence certificates."""

    state: RGState
    eps0: float
    lam: Optional[float]
    max_deviation: float
    rates: Dict[str, float] = field(default_factory=dict)
    constants: Dict[str, float] = field(default_factory=dict)

    @property
    def within_box(self) -> bool:
        return self.max_deviation <= self.eps0

    @property
    def convergent(self) -> bool:
        return all(rate > 0.0 for rate in self.rates.values())

    @property
    def certified(self) -> bool:
        return self.within_box and self.convergent

    def summary(self) -> Dict[str, object]:
        return {
            "N": self.state.N,
            "h_sigma": self.state.h_sigma,
            "eps0": self.eps0,
            "lambda": self.lam,
            "max_deviation": self.max_deviation,
            "rates": self.rates,
            "constants": self.constants,
            "within_box": self.within_box,
            "certified": self.certified,
        }


def flow_solve(beta: BetaFunction, initial: RGState, h_sigma: Optional[int] = None, eps0: float = DEFAULT_BOX,
               lam: Optional[float] = None) -> FlowReport:
    """
    Iterate the flow from scale N down to h_sigma.

    Args:
        beta: beta function family
        initial: couplings on scale N with Z_N = Z1_N = 1
        h_sigma: last scale, the state's h_sigma when omitted
        eps0: size of the box |Z - 1| + |Z1 - 1| + |nu| + |sigma_h / sigma - 1|
        lam: coupling, used to report C in |Z_h - 1| <= C |lambda|

    Raises:
        FlowExitError: the trajectory leaves the box; carries the scale
    """
    N = initial.N
    Z, sigma, nu, Z1 = initial.at(N)
    if Z != 1.0 or Z1 != 1.0:
        raise ValidationError(f"flows start from Z_N = Z1_N = 1, got Z = {Z}, Z1 = {Z1}")
    last = initial.h_sigma if h_sigma is None else int(h_sigma)
    state = RGState(N, last, {N: Z}, {N: sigma}, {N: nu}, {N: Z1})
    logger.info(f"Flow: {type(beta).__name__} from N={N} to h={last}, sigma={sigma:.6g}, nu_N={nu:.6g}")
    worst = state.deviation(N)
    for h in range(N, last, -1):
        b = beta(h, state)
        Z, sigma, nu, Z1 = state.at(h)
        state.set(h - 1, Z + b.Z, sigma * (1.0 + b.sigma), 2.0 * nu + b.nu, Z1 * (1.0 + b.Z1))
        deviation = state.deviation(h - 1)
        worst = max(worst, deviation)
        if not math.isfinite(deviation) or deviation > eps0:
            raise FlowExitError(f"flow leaves the box eps0 = {eps0} on scale {h - 1} (deviation {deviation:.4g})",
                                scale=h - 1)
    scales = sorted(state.Z, reverse=True)
    rates = {
        "Z": convergence_rate([state.Z[h] for h in scales]),
        "Z1": convergence_rate([state.Z1[h] for h in scales]),
        "sigma": convergence_rate([state.sigma[h] / state.sigma_a for h in scales]),
    }
    constants = {}
    if lam:
        constants = {
            "Z": max(abs(state.Z[h] - 1.0) for h in scales) / abs(lam),
            "sigma": max(abs(state.sigma[h] / state.sigma_a - 1.0) for h in scales) / abs(lam),
        }
    report = FlowReport(state, eps0, lam, worst, rates, constants)
    logger.info(f"Flow done: max deviation {worst:.4g}, certified = {report.certified}")
    return report


# fixed point for nu

NuBeta = Callable[[int, Dict[int, float]], float]


def geometric_nu_beta(c: float, theta: float, N: int) -> NuBeta:
    """b^nu_j = c 2^{theta (j - N)}, independent of nu."""
    return lambda j, nu: c * 2.0 ** (theta * (j - N))


def linear_nu_beta(c: float, theta: float, N: int, lam: float, kappa: float = 1.0) -> NuBeta:
    """b^nu_j = c 2^{theta (j - N)} + kappa lambda nu_j."""
    return lambda j, nu: c * 2.0 ** (theta * (j - N)) + kappa * lam * nu[j]


def theta_norm(nu: Dict[int, float], N: int, theta: float) -> float:
    """sup_h |nu_h| 2^{theta (N - h)}."""
    return max((abs(v) * 2.0 ** (theta * (N - h)) for h, v in nu.items()), default=0.0)


def _apply_map(beta_nu: NuBeta, nu: Dict[int, float], scales: Sequence[int]) -> Dict[int, float]:
    out = {}
    running = 0.0
    for h in scales:
        running = 0.5 * running + beta_nu(h, nu)
        out[h] = -0.5 * running
    return out


@dataclass
class FixedPointReport:
    nu_N: float
    trajectory: Dict[int, float]
    contraction_factor: float
    iterations: int
    tail: float
    theta: float

    @property
    def vanishes_at_infinity(self) -> bool:
        return abs(self.tail) <= TAIL_TOL

    def summary(self) -> Dict[str, object]:
        return {
            "nu_N": self.nu_N,
            "contraction_factor": self.contraction_factor,
            "iterations": self.iterations,
            "tail": self.tail,
            "vanishes_at_infinity": self.vanishes_at_infinity,
            "certified": self.contraction_factor < 1.0 and self.vanishes_at_infinity,
        }


def fixed_point_nu(beta_nu: NuBeta, N: int, h_min: Optional[int] = None, theta: float = 0.5,
                   initial: Optional[Dict[int, float]] = None, tol: float = FIXED_POINT_TOL,
                   max_iterations: int = MAX_ITERATIONS) -> FixedPointReport:
    """
    Iterate (T nu)_h = -sum_{h_min <= j <= h} 2^{j-h-1} b^nu_j(nu) to its fixed point.

    The contraction factor is the largest ratio of successive differences in
    the theta-norm while those differences are above round-off.

    Raises:
        ContractionError: a measured factor >= 1, or no convergence within max_iterations
    """
    h_min = N - FIXED_POINT_DEPTH if h_min is None else int(h_min)
    scales = list(range(h_min, N + 1))
    nu = {h: 0.0 for h in scales}
    if initial:
        nu.update({h: float(v) for h, v in initial.items() if h in nu})
    logger.info(f"Fixed point for nu on scales [{h_min}, {N}], theta = {theta}")
    factor = 0.0
    previous = None
    for iteration in range(1, max_iterations + 1):
        new = _apply_map(beta_nu, nu, scales)
        diff = theta_norm({h: new[h] - nu[h] for h in scales}, N, theta)
        size = max(1.0, theta_norm(new, N, theta))
        if previous is not None and previous > 100 * tol * size:
            factor = max(factor, diff / previous)
            if factor >= 1.0:
                raise ContractionError(f"nu map is not a contraction: factor {factor:.4g}", factor=factor)
        nu = new
        previous = diff
        logger.debug(f"iteration {iteration}: |T nu - nu| = {diff:.3e}")
        if diff <= tol * size:
            break
    else:
        raise ContractionError(f"no fixed point within {max_iterations} iterations", factor=factor)
    report = FixedPointReport(nu[N], nu, factor, iteration, nu[h_min], theta)
    logger.info(f"nu_N = {report.nu_N:.12g} after {iteration} iterations, factor {factor:.4g}")
    return report
