"""The exactly solvable nearest-neighbour layer: quadratic forms, propagators, Pfaffians, energy correlations"""

from free_fermion.correlations import free_mpoint_energy_correlation
from free_fermion.momentum import (BOUNDARY_LABELS, C_CHI, T_CRITICAL, MomentumGrid, QuadraticFormBundle,
                                   critical_mode_transform, quadratic_form, quadratic_form_bundle)
from free_fermion.partition import partition_function, partition_function_bc
from free_fermion.propagators import (Propagator2x2Field, chi_propagator, phi_action_matrix, psi_propagator,
                                      psi_propagator_field)
from free_fermion.symmetry import SymmetryReport, symmetry_check

__all__ = [
    "MomentumGrid",
    "QuadraticFormBundle",
    "Propagator2x2Field",
    "SymmetryReport",
    "BOUNDARY_LABELS",
    "T_CRITICAL",
    "C_CHI",
    "quadratic_form",
    "quadratic_form_bundle",
    "critical_mode_transform",
    "psi_propagator",
    "psi_propagator_field",
    "chi_propagator",
    "phi_action_matrix",
    "partition_function_bc",
    "partition_function",
    "free_mpoint_energy_correlation",
    "symmetry_check",
]
