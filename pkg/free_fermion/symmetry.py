"""
Lattice symmetries of the critical-mode action.

Each transformation acts as psi_k -> P_psi psi_{Rk}, chi_k -> P_chi chi_{Rk}
(complex conjugation additionally conjugates every coefficient), so a
momentum kernel K of psi_{-k}^T K(k) psi_k transforms to P^T K(Rk) P, or to
P^T K(-k)^* P for the antilinear one. Energy bilinears transform with the
same P and the bond map b -> Rb.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from free_fermion.momentum import (SIGMA2, chi_form, coupling_form, corrected_form, phi_from_modes,
                                   psi_form)
from lattice.model import ModelSpec
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.symmetry")

SYMMETRY_TOL = 1e-12
LOCAL_FORM_TOL = 1e-6

TRANSFORMATION_NAMES = {
    1: "parity",
    2: "diagonal reflection",
    3: "orthogonal reflection",
    4: "complex conjugation",
}

_E = np.exp(1j * math.pi / 4)

Kernel = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Transformation:
    tid: int
    site_map: np.ndarray
    P_psi: np.ndarray
    P_chi: np.ndarray
    antilinear: bool

    @property
    def name(self) -> str:
        return TRANSFORMATION_NAMES[self.tid]

    def block(self, size: int) -> np.ndarray:
        if size == 2:
            return self.P_psi
        if size == 4:
            out = np.zeros((4, 4), dtype=complex)
            out[:2, :2] = self.P_psi
            out[2:, 2:] = self.P_chi
            return out
        raise ValidationError(f"kernels must be 2x2 (psi) or 4x4 (psi, chi), got {size}")

    def momentum(self, k: np.ndarray) -> np.ndarray:
        return -k if self.antilinear else k @ self.site_map.T

    def apply_kernel(self, kernel: Kernel, k: np.ndarray) -> np.ndarray:
        K = kernel(self.momentum(k))
        if self.antilinear:
            K = np.conj(K)
        P = self.block(K.shape[-1])
        return P.T @ K @ P


def transformation(tid: int) -> Transformation:
    if tid == 1:
        P = np.diag([1j, -1j])
        return Transformation(1, -np.eye(2, dtype=int), P, P, False)
    if tid == 2:
        P = np.array([[0.0, _E], [-np.conj(_E), 0.0]])
        return Transformation(2, np.array([[0, -1], [-1, 0]]), P, -P, False)
    if tid == 3:
        P = np.array([[0.0, 1j], [1j, 0.0]])
        return Transformation(3, np.array([[-1, 0], [0, 1]]), P, P, False)
    if tid == 4:
        P = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        return Transformation(4, np.eye(2, dtype=int), P, P, True)
    raise ValidationError(f"transformation id must be 1..4, got {tid}")


def canonical(kernel: Kernel, k: np.ndarray) -> np.ndarray:
    """(K(k) - K(-k)^T) / 2: the part of a kernel seen by the quadratic form."""
    return 0.5 * (kernel(k) - kernel(-k).T)


@dataclass(frozen=True)
class LocalForm:
    """First-order expansion [[Z D^-, -i m], [i m, Z D^+]] at k = 0 with D^{+-} = i k1 +- k2 and m = Z sigma."""

    Z: complex
    mass: complex
    residual: float

    @property
    def is_two_parameter(self) -> bool:
        scale = max(1.0, abs(self.Z), abs(self.mass))
        return (self.residual <= LOCAL_FORM_TOL * scale and abs(self.Z.imag) <= LOCAL_FORM_TOL * scale
                and abs(self.mass.imag) <= LOCAL_FORM_TOL * scale)


def local_form(kernel: Kernel, step: float = 1e-5) -> LocalForm:
    """Fit a 2x2 kernel's value and gradient at k = 0 to the two-real-parameter form."""
    zero = np.zeros(2)
    K0 = canonical(kernel, zero)
    e1, e2 = np.array([step, 0.0]), np.array([0.0, step])
    d1 = (canonical(kernel, e1) - canonical(kernel, -e1)) / (2 * step)
    d2 = (canonical(kernel, e2) - canonical(kernel, -e2)) / (2 * step)
    Z = -1j * d1[0, 0]
    mass = 1j * K0[0, 1]
    model0 = np.array([[0.0, -1j * mass], [1j * mass, 0.0]])
    model1 = Z * np.array([[1j, 0.0], [0.0, 1j]])
    model2 = Z * np.array([[-1.0, 0.0], [0.0, 1.0]])
    residual = max(float(np.max(np.abs(K0 - model0))), float(np.max(np.abs(d1 - model1))),
                   float(np.max(np.abs(d2 - model2))))
    return LocalForm(complex(Z), complex(mass), residual)


@dataclass
class SymmetryReport:
    transformation_id: int
    name: str
    max_defect: Dict[str, float] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)
    local_forms: Dict[str, LocalForm] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations


def sample_momenta(spec: ModelSpec, count: int = 16, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-math.pi / spec.a, math.pi / spec.a, size=(count, 2))


def default_kernels(spec: ModelSpec, tc_lambda: Optional[float] = None) -> Dict[str, Kernel]:
    """C_sigma, C_chi, the counterterm sigma_2 and the full (psi, chi) kernel with its Q coupling."""

    def full(k):
        out = np.zeros((4, 4), dtype=complex)
        out[:2, :2] = -psi_form(spec, k)
        out[2:, 2:] = -chi_form(spec, k)
        out[:2, 2:] = coupling_form(spec, k)
        out[2:, :2] = coupling_form(spec, k)
        return out

    return {
        "C_sigma": lambda k: corrected_form(spec, k, tc_lambda),
        "C_chi": lambda k: chi_form(spec, k),
        "counterterm": lambda k: SIGMA2.copy(),
        "psi_chi": full,
    }


def energy_bilinear(spec: ModelSpec, j: int) -> np.ndarray:
    """
    4x4 coefficients of E_{x,j} = sum c_fg phi_f(x) phi_g(x + e_j) over phi = (psi_+, psi_-, chi_+, chi_-).

    E_{x,1} = Hbar_x H_{x+e1}, E_{x,2} = Vbar_x V_{x+e2}, rewritten with the local map Phi = W phi.
    """
    W = phi_from_modes(spec)
    if j == 1:
        return np.outer(W[0], W[1])
    return np.outer(W[2], W[3])


def transformed_bilinear(spec: ModelSpec, tr: Transformation, j: int) -> Tuple[int, np.ndarray]:
    """Direction and coefficients of E_b(T phi), expressed in the standard (x, x + e_j') orientation."""
    Cmat = energy_bilinear(spec, j)
    if tr.antilinear:
        Cmat = np.conj(Cmat)
    P = tr.block(4)
    out = P.T @ Cmat @ P
    image = tr.site_map @ (np.array([1, 0]) if j == 1 else np.array([0, 1]))
    new_j = 1 if image[0] != 0 else 2
    if image.sum() < 0:
        # the pair now reads (y + e_j', y)
        out = -out.T
    return new_j, out


def symmetry_check(spec: ModelSpec, transformation_id: int, kernels: Optional[Dict[str, Kernel]] = None,
                   include_sources: bool = True, tol: float = SYMMETRY_TOL,
                   tc_lambda: Optional[float] = None) -> SymmetryReport:
    """
    Apply one transformation to quadratic kernels and energy bilinears and compare entrywise.

    Violations are listed in the report, never raised.
    """
    tr = transformation(transformation_id)
    report = SymmetryReport(tr.tid, tr.name)
    if kernels is None:
        kernels = default_kernels(spec, tc_lambda)
    for label, kernel in kernels.items():
        worst = 0.0
        for k in sample_momenta(spec):
            original = canonical(kernel, k)
            image = canonical(lambda q: tr.apply_kernel(kernel, q), k)
            scale = max(1.0, float(np.max(np.abs(original))))
            worst = max(worst, float(np.max(np.abs(image - original))) / scale)
        report.max_defect[label] = worst
        if worst > tol:
            report.violations.append(f"{label}: relative defect {worst:.3e} under {tr.name}")
        if kernel(np.zeros(2)).shape[-1] == 2:
            report.local_forms[label] = local_form(kernel)
    if include_sources:
        for j in (1, 2):
            new_j, image = transformed_bilinear(spec, tr, j)
            target = energy_bilinear(spec, new_j)
            defect = float(np.max(np.abs(image - target))) / max(1.0, float(np.max(np.abs(target))))
            label = f"E_{j}"
            report.max_defect[label] = defect
            if defect > tol:
                report.violations.append(f"{label}: defect {defect:.3e} under {tr.name}")
    if report.violations:
        logger.warning(f"symmetry {tr.tid} ({tr.name}): {len(report.violations)} violation(s)")
    return report
