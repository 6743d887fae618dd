"""
Momentum grids and the quadratic forms of the free Grassmann action.

The action of the nearest-neighbour model is (1/L^2) sum_k Phi_{-k}^T C(k) Phi_k
with Phi = (Hbar, H, Vbar, V). The unitary U and the rescaling i omega / sqrt(pi t)
split it into the critical pair psi = (psi_+, psi_-) and the massive pair
chi = (chi_+, chi_-), coupled by Q(k).
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from lattice.model import ModelSpec
from utils.exceptions import ValidationError

SQRT2 = math.sqrt(2.0)
T_CRITICAL = SQRT2 - 1.0
BETA_CRITICAL = 0.5 * math.log(1.0 + SQRT2)
C_CHI = 8.0 + 4.0 * SQRT2

SIGMA2 = np.array([[0.0, -1j], [1j, 0.0]])

Alpha = Tuple[int, int]
BOUNDARY_LABELS: Tuple[Alpha, ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))
Momentum = Union[Tuple[float, float], np.ndarray]

_PHASE = np.exp(1j * math.pi / 4)

# rows act on (Hbar, H, Vbar, V); output order (psi_+, psi_-, chi_+, chi_-)
U_MATRIX = 0.5 * np.array([
    [_PHASE, np.conj(_PHASE), 1.0, -1j],
    [np.conj(_PHASE), _PHASE, 1.0, 1j],
    [-_PHASE, -np.conj(_PHASE), 1.0, -1j],
    [-np.conj(_PHASE), -_PHASE, 1.0, 1j],
])

OMEGA = np.array([1.0, -1.0, 1.0, -1.0])


def tau(alpha: Alpha) -> int:
    """Sign of the boundary label in the four-Pfaffian sum: -1 for (+,+), +1 otherwise."""
    return -1 if tuple(alpha) == (1, 1) else 1


def parse_alpha(value) -> Alpha:
    """Accept (1, -1), '+-', '(+,-)' or 'pm' style labels."""
    if isinstance(value, str):
        chars = [c for c in value if c in "+-pm"]
        if len(chars) != 2:
            raise ValidationError(f"cannot read boundary label {value!r}")
        return tuple(1 if c in "+p" else -1 for c in chars)
    pair = tuple(int(v) for v in value)
    if len(pair) != 2 or any(v not in (1, -1) for v in pair):
        raise ValidationError(f"boundary label must be two signs, got {value!r}")
    return pair


def alpha_label(alpha: Alpha) -> str:
    return "".join("+" if s > 0 else "-" for s in alpha)


@dataclass(frozen=True)
class MomentumGrid:
    """
    The M^2 momenta k = (2 pi / L)(n + delta) of one boundary label.

    delta_i = 0 for a periodic direction (alpha_i = +), 1/2 for an
    antiperiodic one (alpha_i = -). Only (+,+) contains k = 0.
    """

    M: int
    alpha: Alpha = (-1, -1)
    a: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))
        if self.M < 1:
            raise ValidationError("momentum grid needs M >= 1")

    @property
    def L(self) -> float:
        return self.a * self.M

    @property
    def shifts(self) -> Tuple[float, float]:
        return tuple(0.0 if s > 0 else 0.5 for s in self.alpha)

    def components(self) -> Tuple[np.ndarray, np.ndarray]:
        n = np.arange(self.M)
        d1, d2 = self.shifts
        return 2 * math.pi * (n + d1) / self.L, 2 * math.pi * (n + d2) / self.L

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """(k1, k2) arrays of shape (M, M) indexed by (n1, n2)."""
        k1, k2 = self.components()
        return np.meshgrid(k1, k2, indexing="ij")

    def points(self) -> np.ndarray:
        K1, K2 = self.mesh()
        return np.stack([K1.ravel(), K2.ravel()], axis=1)

    @property
    def contains_zero(self) -> bool:
        return self.alpha == (1, 1)

    def negation_index(self) -> np.ndarray:
        """For each n (flattened), the flattened index of the grid point equal to -k mod 2 pi / a."""
        n = np.arange(self.M)
        neg = []
        for d in self.shifts:
            neg.append((-n - int(2 * d)) % self.M)
        N1, N2 = np.meshgrid(neg[0], neg[1], indexing="ij")
        return (N1 * self.M + N2).ravel()


def _check_t(spec: ModelSpec) -> float:
    t = spec.t
    if not 0.0 < t < 1.0:
        raise ValidationError(f"t = tanh(beta J) must lie in (0, 1), got {t}")
    return t


def _split(k: Momentum) -> Tuple[np.ndarray, np.ndarray]:
    k = np.asarray(k, dtype=float)
    return k[..., 0], k[..., 1]


def quadratic_form(spec: ModelSpec, k: Momentum) -> np.ndarray:
    """C(k) in the (Hbar, H, Vbar, V) basis; k may carry leading batch axes."""
    t = _check_t(spec)
    k1, k2 = _split(k)
    a = spec.a
    e1 = np.exp(-1j * a * k1)
    e2 = np.exp(-1j * a * k2)
    one = np.ones_like(e1)
    zero = np.zeros_like(e1)
    C = np.stack([
        np.stack([zero, one + t * e1, -one, -one], axis=-1),
        np.stack([-one - t * np.conj(e1), zero, one, -one], axis=-1),
        np.stack([one, -one, zero, one + t * e2], axis=-1),
        np.stack([one, one, -one - t * np.conj(e2), zero], axis=-1),
    ], axis=-2)
    return 0.5 / a * C


def rescaling(spec: ModelSpec) -> np.ndarray:
    """diag(i omega) / sqrt(pi t): Phi = U^dagger D (psi, chi)."""
    t = _check_t(spec)
    return np.diag(1j * OMEGA / math.sqrt(math.pi * t))


def phi_from_modes(spec: ModelSpec) -> np.ndarray:
    """W with Phi_x = W (psi_+, psi_-, chi_+, chi_-)_x; local because U and D do not depend on k."""
    return U_MATRIX.conj().T @ rescaling(spec)


def modes_from_phi(spec: ModelSpec) -> np.ndarray:
    """W^{-1} = D^{-1} U."""
    return np.linalg.inv(rescaling(spec)) @ U_MATRIX


def dirac_symbols(spec: ModelSpec, k: Momentum) -> Tuple[np.ndarray, np.ndarray]:
    """D^{+-}(k) = a^{-1}(i sin a k1 +- sin a k2)."""
    k1, k2 = _split(k)
    a = spec.a
    s1, s2 = np.sin(a * k1), np.sin(a * k2)
    return (1j * s1 + s2) / a, (1j * s1 - s2) / a


def sigma_psi(spec: ModelSpec, k: Momentum) -> np.ndarray:
    t = _check_t(spec)
    k1, k2 = _split(k)
    a = spec.a
    return (np.cos(a * k1) + np.cos(a * k2) - 2 * (SQRT2 - 1) / t) / a


def sigma_chi(spec: ModelSpec, k: Momentum) -> np.ndarray:
    t = _check_t(spec)
    k1, k2 = _split(k)
    a = spec.a
    return (np.cos(a * k1) + np.cos(a * k2) + 2 * (SQRT2 + 1) / t) / a


def _two_by_two(a, b, c, d) -> np.ndarray:
    return np.stack([np.stack([a, b], axis=-1), np.stack([c, d], axis=-1)], axis=-2)


def _mode_form(spec: ModelSpec, k: Momentum, sigma) -> np.ndarray:
    dp, dm = dirac_symbols(spec, k)
    return _two_by_two(-dm, 1j * sigma, -1j * sigma, -dp)


def psi_form(spec: ModelSpec, k: Momentum) -> np.ndarray:
    """C_psi(k) = [[-D^-, i sigma_psi], [-i sigma_psi, -D^+]]."""
    return _mode_form(spec, k, sigma_psi(spec, k))


def chi_form(spec: ModelSpec, k: Momentum) -> np.ndarray:
    return _mode_form(spec, k, sigma_chi(spec, k))


def coupling_form(spec: ModelSpec, k: Momentum) -> np.ndarray:
    """Q(k) = a^{-1}[[-i s1 - s2, i(c1 - c2)], [-i(c1 - c2), -i s1 + s2]]."""
    k1, k2 = _split(k)
    a = spec.a
    s1, s2 = np.sin(a * k1), np.sin(a * k2)
    dc = np.cos(a * k1) - np.cos(a * k2)
    return _two_by_two(-1j * s1 - s2, 1j * dc, -1j * dc, -1j * s1 + s2) / a


def critical_mode_transform(spec: ModelSpec, k: Momentum) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (C_psi, C_chi, Q) read off from 4 pi D U-bar C(k) U^dagger D.

    The transformed 4x4 kernel has the block form [[-C_psi, Q], [Q, -C_chi]].
    """
    C = quadratic_form(spec, k)
    D = rescaling(spec)
    K = 4 * math.pi * (D @ U_MATRIX.conj() @ C @ U_MATRIX.conj().T @ D)
    return -K[..., :2, :2], -K[..., 2:, 2:], K[..., :2, 2:]


def mass(spec: ModelSpec, tc_lambda: Optional[float] = None) -> float:
    """sigma = (2/a)(t_c(0)/t_c(lambda))(t - t_c(lambda))/t."""
    t = _check_t(spec)
    tc = T_CRITICAL if tc_lambda is None else tc_lambda
    return 2.0 / spec.a * (T_CRITICAL / tc) * (t - tc) / t


def counterterm(tc_lambda: Optional[float] = None) -> float:
    """nu = (t_c(lambda) - t_c(0)) / (2 pi t_c(lambda)); zero for the unperturbed model."""
    if tc_lambda is None:
        return 0.0
    return (tc_lambda - T_CRITICAL) / (2 * math.pi * tc_lambda)


def critical_temperature_from_counterterm(nu: float) -> float:
    """Inverse of ``counterterm``: t_c(lambda) = t_c(0) / (1 - 2 pi nu)."""
    if 2 * math.pi * nu >= 1.0:
        raise ValidationError(f"counterterm nu = {nu} has no critical temperature")
    return T_CRITICAL / (1.0 - 2 * math.pi * nu)


def wilson_correction(spec: ModelSpec, k: Momentum) -> np.ndarray:
    """Q C_chi^{-1} Q: the shift of the psi form after integrating out chi."""
    Q = coupling_form(spec, k)
    return Q @ np.linalg.inv(chi_form(spec, k)) @ Q


def corrected_form(spec: ModelSpec, k: Momentum, tc_lambda: Optional[float] = None) -> np.ndarray:
    """C_sigma(k) = [[-D^-, i sigma(k)], [-i sigma(k), -D^+]] - Q C_chi^{-1} Q, sigma(k) = a^{-1}(c1 + c2 - 2) + sigma."""
    k1, k2 = _split(k)
    a = spec.a
    sig = (np.cos(a * k1) + np.cos(a * k2) - 2.0) / a + mass(spec, tc_lambda)
    return _mode_form(spec, k, sig) - wilson_correction(spec, k)


def schur_psi_form(spec: ModelSpec, k: Momentum) -> np.ndarray:
    """C_psi - Q C_chi^{-1} Q, the exact psi marginal of the nearest-neighbour action."""
    return psi_form(spec, k) - wilson_correction(spec, k)


@dataclass(frozen=True)
class QuadraticFormBundle:
    """All quadratic kernels at one momentum."""

    k: Tuple[float, float]
    C: np.ndarray
    U: np.ndarray
    C_psi: np.ndarray
    C_chi: np.ndarray
    Q: np.ndarray
    C_sigma: np.ndarray
    sigma: float
    nu: float

    def unitarity_defect(self) -> float:
        return float(np.max(np.abs(self.U @ self.U.conj().T - np.eye(4))))

    def antisymmetry_defect(self, spec: ModelSpec) -> float:
        """max |C(k) + C(-k)^T|."""
        minus = quadratic_form(spec, (-self.k[0], -self.k[1]))
        return float(np.max(np.abs(self.C + minus.T)))


def quadratic_form_bundle(spec: ModelSpec, k: Momentum, tc_lambda: Optional[float] = None) -> QuadraticFormBundle:
    k = (float(k[0]), float(k[1]))
    C_psi, C_chi, Q = critical_mode_transform(spec, k)
    return QuadraticFormBundle(
        k=k,
        C=quadratic_form(spec, k),
        U=U_MATRIX.copy(),
        C_psi=C_psi,
        C_chi=C_chi,
        Q=Q,
        C_sigma=corrected_form(spec, k, tc_lambda),
        sigma=mass(spec, tc_lambda),
        nu=counterterm(tc_lambda),
    )
