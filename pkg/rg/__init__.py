"""Multiscale analysis: scale decomposition, localization, GN trees, running coupling flows, diagrams"""

from rg.diagrams import multiscale_loop_sum, one_loop_source_beta, quartic_kernel, short_memory_profile
from rg.flow import BetaFactory, BetaFunction, flow_solve, fixed_point_nu, geometric_nu_beta, linear_nu_beta
from rg.gram import GramVectors, gram_bound_check
from rg.localization import LocalizedKernel, localize_quadratic, localize_source
from rg.scales import (RGState, ScaleDecomposition, partition_of_unity, single_scale_decay,
                       single_scale_propagator, telescoped_propagator)
from rg.trees import GNTree, dimension_report, dimension_table, enumerate_gn_trees

__all__ = [
    "ScaleDecomposition",
    "RGState",
    "LocalizedKernel",
    "GNTree",
    "BetaFunction",
    "BetaFactory",
    "GramVectors",
    "partition_of_unity",
    "single_scale_propagator",
    "telescoped_propagator",
    "single_scale_decay",
    "localize_quadratic",
    "localize_source",
    "enumerate_gn_trees",
    "dimension_table",
    "dimension_report",
    "flow_solve",
    "fixed_point_nu",
    "geometric_nu_beta",
    "linear_nu_beta",
    "quartic_kernel",
    "one_loop_source_beta",
    "short_memory_profile",
    "multiscale_loop_sum",
    "gram_bound_check",
]
