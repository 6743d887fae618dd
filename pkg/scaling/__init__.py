"""Scaling limit: continuum and dressed lattice propagators, the loop formula, beta tuning, convergence studies"""

from scaling.continuum import ContinuumParams, continuum_propagator, continuum_propagator_quadrature
from scaling.lattice import dressed_lattice_propagator, infinite_lattice_energy_correlation, infinite_phi_propagator
from scaling.loops import combinatorial_growth, lattice_loop_correlation, mpoint_scaling_correlation, wick_correlation
from scaling.sources import CorrelationSource, CorrelationSourceFactory
from scaling.study import ConvergenceStudy, convergence_study, template_check
from scaling.tuning import tune_beta

__all__ = [
    "ContinuumParams",
    "ConvergenceStudy",
    "CorrelationSource",
    "CorrelationSourceFactory",
    "continuum_propagator",
    "continuum_propagator_quadrature",
    "dressed_lattice_propagator",
    "infinite_phi_propagator",
    "infinite_lattice_energy_correlation",
    "mpoint_scaling_correlation",
    "lattice_loop_correlation",
    "wick_correlation",
    "combinatorial_growth",
    "tune_beta",
    "convergence_study",
    "template_check",
]
