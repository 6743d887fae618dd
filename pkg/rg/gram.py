"""
Gram representation of the chi propagator and the Hadamard bound on its determinants.

With den(k) = |D(k)|^2 + sigma_chi(k)^2 and Num(k) = [[D^+, i sigma_chi], [-i sigma_chi, D^-]],

    B_{x,w}(k, s)  = delta_{s w} (sqrt(2 pi) / L) e^{ik.x} den^{-1/4}
    C_{y,w'}(k, s) = (sqrt(2 pi) / L) e^{ik.y} den^{-3/4} Num_{s w'}

so that g^chi_{w w'}(x - y) = <B_{x,w}, C_{y,w'}> and every matrix of chi
propagators is a Gram matrix.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import hadamard

from free_fermion.momentum import MomentumGrid, dirac_symbols, sigma_chi
from free_fermion.propagators import Offset, chi_propagator_field
from lattice.model import ModelSpec
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.rg")

GRAM_TOL = 1e-8
MAX_GRAM_POINTS = 10
HADAMARD_SLACK = 1e-10
# |det| bound for Gram matrices of unit vectors
GRAM_UNIT_BOUND = 1.0


class GramVectors:
    """B and C vectors of one model on its momentum grid."""

    def __init__(self, spec: ModelSpec, alpha=(-1, -1)):
        self.spec = spec
        self.grid = MomentumGrid(spec.M, alpha, spec.a)
        K1, K2 = self.grid.mesh()
        k = np.stack([K1, K2], axis=-1)
        dp, dm = dirac_symbols(spec, k)
        s = sigma_chi(spec, k)
        self.den = (np.abs(dp) ** 2 + s * s).ravel()
        num = np.stack([np.stack([dp, 1j * s], axis=-1), np.stack([-1j * s, dm], axis=-1)], axis=-2)
        self.num = num.reshape(-1, 2, 2)
        self.k = self.grid.points()
        self.norm = math.sqrt(2 * math.pi) / self.grid.L

    def _phase(self, x: Offset) -> np.ndarray:
        return np.exp(1j * self.grid.a * (self.k @ np.asarray(x, dtype=float)))

    def B(self, x: Offset, omega: int) -> np.ndarray:
        """Vector of shape (M^2, 2)."""
        out = np.zeros((len(self.k), 2), dtype=complex)
        out[:, omega] = self.norm * self._phase(x) * self.den ** -0.25
        return out

    def C(self, y: Offset, omega: int) -> np.ndarray:
        weight = self.norm * self._phase(y) * self.den ** -0.75
        return weight[:, None] * self.num[:, :, omega]

    @staticmethod
    def inner(u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.vdot(u, v))

    def B_norm_squared(self) -> float:
        """(2 pi / L^2) sum_k den^{-1/2}, the same for every x and omega."""
        return float(2 * math.pi / self.grid.L ** 2 * np.sum(self.den ** -0.5))


@dataclass
class GramReport:
    reconstruction_error: float
    B_norm_squared: float
    B_norm_closed_form: float
    C_constant: float
    ratios: List[float] = field(default_factory=list)
    control_determinant: float = 0.0
    violations: List[str] = field(default_factory=list)

    @property
    def hadamard_holds(self) -> bool:
        return all(r <= 1.0 + HADAMARD_SLACK for r in self.ratios)

    @property
    def control_fails(self) -> bool:
        return self.control_determinant > GRAM_UNIT_BOUND

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> Dict[str, object]:
        return {
            "reconstruction_error": self.reconstruction_error,
            "B_norm_squared": self.B_norm_squared,
            "C": self.C_constant,
            "max_hadamard_ratio": max(self.ratios, default=0.0),
            "control_determinant": self.control_determinant,
            "control_bound": GRAM_UNIT_BOUND,
            "violations": self.violations,
        }


def _random_fields(rng: np.random.Generator, M: int, n: int) -> List[Tuple[Offset, int]]:
    sites = rng.choice(M * M, size=n, replace=False)
    return [((int(s) // M, int(s) % M), int(rng.integers(2))) for s in sites]


def hadamard_control(n: int = 4) -> float:
    """|det H| for a +-1 Hadamard matrix, equal to n^{n/2}: the bound is attained."""
    H = hadamard(n)
    return float(abs(np.linalg.det(H)))


def gram_bound_check(spec: ModelSpec, offsets: Optional[Sequence[Offset]] = None, instances: int = 20,
                     points: int = 4, seed: int = 0, alpha=(-1, -1)) -> GramReport:
    """
    Check the Gram representation of g^chi and the Hadamard bound on random Gram matrices.

    Args:
        spec: model whose chi propagator is represented
        offsets: offsets x - y for the reconstruction, 5 random ones when omitted
        instances: random Gram matrices for the Hadamard bound
        points: fields per Gram matrix, at most 10
        seed: generator seed
    """
    if not 1 <= points <= MAX_GRAM_POINTS:
        raise ValidationError(f"Gram matrices are limited to 1..{MAX_GRAM_POINTS} fields, got {points}")
    if points > spec.M * spec.M:
        raise ValidationError(f"{points} fields do not fit on the {spec.M}x{spec.M} torus")
    rng = np.random.default_rng(seed)
    vectors = GramVectors(spec, alpha)
    chi = chi_propagator_field(spec, alpha)
    if offsets is None:
        offsets = [tuple(int(c) for c in rng.integers(-spec.M + 1, spec.M, size=2)) for _ in range(5)]
    violations = []

    error = 0.0
    for d in offsets:
        for w in range(2):
            for w2 in range(2):
                value = vectors.inner(vectors.B(d, w), vectors.C((0, 0), w2))
                error = max(error, abs(value - chi.at(d)[w, w2]))
    if error > GRAM_TOL:
        violations.append(f"Gram reconstruction error {error:.3e}")

    norm_sq = float(np.vdot(vectors.B((0, 0), 0), vectors.B((0, 0), 0)).real)
    closed = vectors.B_norm_squared()
    if abs(norm_sq - closed) > GRAM_TOL * closed:
        violations.append(f"|B|^2 = {norm_sq:.12g} differs from {closed:.12g}")

    ratios = []
    for _ in range(instances):
        rows = _random_fields(rng, spec.M, points)
        cols = _random_fields(rng, spec.M, points)
        Bs = [vectors.B(x, w) for x, w in rows]
        Cs = [vectors.C(y, w) for y, w in cols]
        G = np.array([[vectors.inner(b, c) for c in Cs] for b in Bs])
        bound = np.prod([np.linalg.norm(b) for b in Bs]) * np.prod([np.linalg.norm(c) for c in Cs])
        ratios.append(float(abs(np.linalg.det(G)) / bound))
    if max(ratios, default=0.0) > 1.0 + HADAMARD_SLACK:
        violations.append(f"Hadamard bound violated: ratio {max(ratios):.6g}")

    report = GramReport(error, norm_sq, closed, closed * spec.a, ratios, hadamard_control(), violations)
    logger.info(f"Gram check: reconstruction {error:.2e}, |B|^2 a = {report.C_constant:.6g}, "
                f"max Hadamard ratio {max(ratios, default=0.0):.3g}")
    if violations:
        logger.warning(f"Gram check violations: {violations}")
    return report
