"""Polymer expansion of the finite-range interaction: strings, activities, hard-core sums, Mayer kernels"""

from polymer.activities import DecoratedPolymer, Polymer, PolymerArena, grassmann_activity, polymer_activity
from polymer.diagnostics import ConvergenceReport, convergence_diagnostic
from polymer.hardcore import BondPolynomial, hardcore_partition_function, hardcore_polymer_sum
from polymer.kernels import ClusterKernel, Truncation, kernel_W, vacuum_energy
from polymer.mayer import mayer_coefficient
from polymer.strings import StringPath, enumerate_strings

__all__ = [
    "StringPath",
    "Polymer",
    "DecoratedPolymer",
    "PolymerArena",
    "BondPolynomial",
    "ClusterKernel",
    "Truncation",
    "ConvergenceReport",
    "enumerate_strings",
    "polymer_activity",
    "grassmann_activity",
    "hardcore_polymer_sum",
    "hardcore_partition_function",
    "mayer_coefficient",
    "kernel_W",
    "vacuum_energy",
    "convergence_diagnostic",
]
