"""
Truncated energy correlations of the nearest-neighbour model from Wick contractions.

On a bond the energy observable is represented by s_b <-> t + (1 - t^2) E_b
with E_b = Hbar_x H_{x+e1} (or Vbar_x V_{x+e2}), so for m >= 2

    <eps_b1; ...; eps_bm> = a^{-m} (1 - t^2)^m E^T(E_b1; ...; E_bm).

A single boundary label uses its Phi propagator. The exact torus answer
mixes the four labels at the level of moments, weighting each by
tau_alpha Z_alpha; that mixture is evaluated with complementary
sub-Pfaffians of the position-space action so the (+,+) sector stays finite
at criticality.
"""

from typing import Dict, List, Sequence, Union

import numpy as np

from free_fermion.momentum import BOUNDARY_LABELS, Alpha, alpha_label, parse_alpha, tau
from free_fermion.partition import prefactor
from free_fermion.propagators import (COMPONENTS, LatticeField, bond_generators, phi_action_matrix,
                                      phi_propagator_field)
from grassmann.wick import bilinear_truncated_expectation, monomial_gaussian_integral
from lattice.enumeration import check_bonds
from lattice.model import BondIndex, ModelSpec
from utils.combinatorics import joint_cumulant
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.correlations")

MIXTURE_MAX_SIDE = 8

Boundary = Union[str, Sequence[int]]


def _bond_endpoints(bond: BondIndex):
    """Unwrapped (site, component) of the two Phi factors of E_b."""
    x = bond.x
    if bond.j == 1:
        return (x, COMPONENTS["Hbar"]), ((x[0] + 1, x[1]), COMPONENTS["H"])
    return (x, COMPONENTS["Vbar"]), ((x[0], x[1] + 1), COMPONENTS["V"])


def bond_propagator_matrix(bonds: Sequence[BondIndex], field: LatticeField) -> np.ndarray:
    """Propagator restricted to the 2m generators (Hbar_x, H_{x+e1}, ...) of the bonds, in that order."""
    points = []
    for bond in bonds:
        points.extend(_bond_endpoints(bond))
    n = len(points)
    G = np.zeros((n, n), dtype=complex)
    for p, (site_p, comp_p) in enumerate(points):
        for q, (site_q, comp_q) in enumerate(points):
            if p == q:
                continue
            r = (site_p[0] - site_q[0], site_p[1] - site_q[1])
            G[p, q] = field.at(r)[comp_p, comp_q]
    return G


def _single_boundary(spec: ModelSpec, bonds: List[BondIndex], alpha: Alpha) -> float:
    field = phi_propagator_field(spec, alpha)
    G = bond_propagator_matrix(bonds, field)
    bilinears = [[(1.0, 2 * i, 2 * i + 1)] for i in range(len(bonds))]
    kappa = bilinear_truncated_expectation(bilinears, G)
    t = spec.t
    m = len(bonds)
    if m == 1:
        value = t + (1 - t * t) * kappa
    else:
        value = (1 - t * t) ** m * kappa
    return float(value.real) / spec.a ** m


def boundary_moment_weights(spec: ModelSpec, bonds: List[BondIndex]) -> Dict[int, float]:
    """
    W(S) = sum_alpha tau_alpha Z_alpha <prod_{b in S} (t + (1 - t^2) E_b)>_alpha for every subset S.

    W(S) / W(empty) is the spin moment <prod_{b in S} s_b>.
    """
    t = spec.t
    m = len(bonds)
    pre = prefactor(spec)
    weights = {mask: 0.0 for mask in range(1 << m)}
    for alpha in BOUNDARY_LABELS:
        A = phi_action_matrix(spec, alpha)
        gens = [bond_generators(b, spec, alpha) for b in bonds]
        # integral of prod_{b in T} E_b e^S for every T
        integrals = {}
        for mask in range(1 << m):
            idx = []
            sign = 1
            for i in range(m):
                if (mask >> i) & 1:
                    gi, gj, s = gens[i]
                    idx.extend([gi, gj])
                    sign *= s
            integrals[mask] = sign * monomial_gaussian_integral(idx, A)
        for mask in range(1 << m):
            total = 0j
            sub = mask
            while True:
                size_t = bin(sub).count("1")
                size_rest = bin(mask).count("1") - size_t
                total += t ** size_rest * (1 - t * t) ** size_t * integrals[sub]
                if sub == 0:
                    break
                sub = (sub - 1) & mask
            weights[mask] += tau(alpha) * pre * total.real
        logger.debug(f"boundary {alpha_label(alpha)}: weight of empty set {tau(alpha) * pre * integrals[0].real:.6g}")
    return weights


def _mixture(spec: ModelSpec, bonds: List[BondIndex]) -> float:
    if spec.M > MIXTURE_MAX_SIDE:
        raise ValidationError(f"exact boundary mixture limited to M <= {MIXTURE_MAX_SIDE}")
    W = boundary_moment_weights(spec, bonds)
    norm = W[0]

    def moment(block):
        mask = 0
        for i in block:
            mask |= 1 << i
        return W[mask] / norm

    return float(joint_cumulant(len(bonds), moment)) / spec.a ** len(bonds)


def free_mpoint_energy_correlation(spec: ModelSpec, bonds: Sequence[BondIndex],
                                   boundary: Boundary = (-1, -1)) -> float:
    """
    <eps_b1; ...; eps_bm> of the nearest-neighbour model.

    Args:
        spec: model with lambda = 0
        bonds: distinct bonds, at most six
        boundary: a label such as (-1, -1) or '+-' for one Pfaffian sector, or
            'combined' for the exact tau-weighted torus mixture
    """
    if spec.lam != 0.0:
        raise ValidationError("free correlations require lambda = 0")
    bonds = check_bonds(bonds, spec.M)
    if isinstance(boundary, str) and boundary == "combined":
        return _mixture(spec, bonds)
    return _single_boundary(spec, bonds, parse_alpha(boundary))


def energy_correlation_table(spec: ModelSpec, base: BondIndex, separations: Sequence[int],
                             boundary: Boundary = (-1, -1)) -> List[List]:
    """Rows (x1, x2, j, y1, y2, j', r, value) for two-point correlations along direction 1."""
    rows = []
    for r in separations:
        other = BondIndex((base.x[0] + r, base.x[1]), base.j).wrapped(spec.M)
        value = free_mpoint_energy_correlation(spec, [base, other], boundary)
        rows.append([base.x[0], base.x[1], base.j, other.x[0], other.x[1], other.j, r, value])
    return rows


CORRELATION_HEADER = ["x1", "x2", "j", "y1", "y2", "j_prime", "separation", "value"]


def decay_exponent(separations: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log|value| against log(separation)."""
    x = np.log(np.asarray(separations, dtype=float))
    y = np.log(np.abs(np.asarray(values, dtype=float)))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
