"""Exact finite-dimensional Grassmann algebra: products, Berezin integrals, Pfaffians, cumulants"""

from grassmann.algebra import (GrassmannPolynomial, berezin_integrate, exponential, logarithm,
                               multiply)
from grassmann.pfaffian import AntisymmetricMatrix, pfaffian, pfaffian_cofactor
from grassmann.wick import (expectation, gaussian_action, gaussian_integral, propagator_from_action,
                            monomial_gaussian_integral, truncated_expectation, wick_moment)

__all__ = [
    "GrassmannPolynomial",
    "AntisymmetricMatrix",
    "multiply",
    "exponential",
    "logarithm",
    "berezin_integrate",
    "pfaffian",
    "pfaffian_cofactor",
    "gaussian_action",
    "gaussian_integral",
    "monomial_gaussian_integral",
    "expectation",
    "truncated_expectation",
    "wick_moment",
    "propagator_from_action",
]
