"""The spin model: Hamiltonian, exact enumeration on tiny tori, Monte Carlo sampling"""

from lattice.enumeration import (exact_partition_function, exact_spin_correlation,
                                 exact_truncated_energy_correlation, hamiltonian, source_derivative_sums,
                                 transfer_matrix_moment)
from lattice.model import (BondIndex, ModelSpec, SpinConfiguration, all_bonds, diagonal_interaction,
                           interacting_pairs, symmetric_interaction)
from lattice.monte_carlo import MCResult, mc_estimate_energy_correlation, metropolis_transition_matrix

__all__ = [
    "ModelSpec",
    "BondIndex",
    "SpinConfiguration",
    "all_bonds",
    "diagonal_interaction",
    "symmetric_interaction",
    "interacting_pairs",
    "hamiltonian",
    "exact_partition_function",
    "exact_truncated_energy_correlation",
    "exact_spin_correlation",
    "source_derivative_sums",
    "transfer_matrix_moment",
    "mc_estimate_energy_correlation",
    "metropolis_transition_matrix",
    "MCResult",
]
