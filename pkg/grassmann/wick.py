"""
Gaussian Grassmann integrals, Wick expectations and truncated expectations.

Conventions: for S = -1/2 theta^T A theta and the ascending measure,
the integral of exp(S) is Pf(A) and <theta_i theta_j> = (A^{-1})_{ij}.
"""

from typing import Dict, List, Optional, Sequence

import numpy as np

from grassmann.algebra import GrassmannPolynomial, multiply, permutation_sign, popcount, reorder_sign
from grassmann.pfaffian import MatrixLike, as_antisymmetric, pfaffian, sub_pfaffian
from utils.combinatorics import joint_cumulant
from utils.exceptions import GrassmannError


def _bits(mask: int) -> List[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def gaussian_action(A: MatrixLike, prune: Optional[float] = None) -> GrassmannPolynomial:
    """The quadratic polynomial -1/2 theta^T A theta = -sum_{i<j} A_ij theta_i theta_j."""
    M = as_antisymmetric(A)
    n = M.shape[0]
    terms = {}
    for i in range(n):
        for j in range(i + 1, n):
            if M[i, j] != 0:
                terms[(1 << i) | (1 << j)] = -M[i, j]
    kw = {} if prune is None else {"prune": prune}
    return GrassmannPolynomial(n, terms, **kw)


def gaussian_integral(p: GrassmannPolynomial, A: MatrixLike, order: Optional[Sequence[int]] = None) -> complex:
    """
    Integral of p * exp(-1/2 theta^T A theta), evaluated term by term.

    Each monomial theta_I pairs with the component of the exponential on the
    complement J, whose coefficient is (-1)^{|J|/2} Pf(A_JJ); the exponential
    itself is never expanded.
    """
    M = as_antisymmetric(A)
    n = M.shape[0]
    if p.generator_count != n:
        raise GrassmannError(f"polynomial has {p.generator_count} generators, matrix has dimension {n}")
    full = (1 << n) - 1
    half_n = n // 2
    cache: Dict[int, complex] = {}
    total = 0j
    for mask, coeff in p.terms.items():
        if popcount(mask) % 2:
            continue
        comp = full ^ mask
        if comp not in cache:
            cache[comp] = sub_pfaffian(M, _bits(comp))
        pf = cache[comp]
        if pf == 0:
            continue
        half_j = popcount(comp) // 2
        sign = reorder_sign(mask, comp) * (-1) ** (half_j + half_n)
        total += coeff * sign * pf
    if order is not None:
        order = list(order)
        if sorted(order) != list(range(n)):
            raise GrassmannError("integration order must be a permutation of all generators")
        total *= permutation_sign(order)
    return total


def monomial_gaussian_integral(indices: Sequence[int], A: MatrixLike) -> complex:
    """
    Integral of theta_{i1} ... theta_{ik} exp(-1/2 theta^T A theta) over all generators of A.

    The monomial is brought to ascending order first; repeated generators give
    zero. Only the complementary sub-Pfaffian is evaluated, so this stays cheap
    for actions on hundreds of generators.
    """
    M = as_antisymmetric(A)
    n = M.shape[0]
    idx = list(indices)
    if len(set(idx)) != len(idx) or len(idx) % 2:
        return 0j
    if any(i < 0 or i >= n for i in idx):
        raise GrassmannError(f"generator index out of range for a {n}-dimensional action")
    mask = 0
    for i in idx:
        mask |= 1 << i
    comp = ((1 << n) - 1) ^ mask
    rest = [j for j in range(n) if not (mask >> j) & 1]
    sign = permutation_sign(idx) * reorder_sign(mask, comp) * (-1) ** (len(rest) // 2 + n // 2)
    return sign * sub_pfaffian(M, rest)


def wick_moment(indices: Sequence[int], G: np.ndarray) -> complex:
    """<theta_{i1} ... theta_{i2k}> = Pf(G restricted to the indices, in order)."""
    idx = list(indices)
    if len(idx) % 2:
        return 0j
    if len(set(idx)) != len(idx):
        return 0j
    return sub_pfaffian(G, idx)


def expectation(p: GrassmannPolynomial, G: MatrixLike) -> complex:
    """Gaussian expectation of a polynomial with propagator G."""
    Gm = as_antisymmetric(G, tol=1e-10)
    if p.generator_count != Gm.shape[0]:
        raise GrassmannError(f"polynomial has {p.generator_count} generators, propagator has {Gm.shape[0]}")
    total = 0j
    for mask, coeff in p.terms.items():
        if popcount(mask) % 2:
            continue
        total += coeff * sub_pfaffian(Gm, _bits(mask))
    return total


def truncated_expectation(monomials: Sequence[GrassmannPolynomial], propagator: MatrixLike) -> complex:
    """
    Truncated expectation E^T(X_1; ...; X_n) under the Gaussian with the given propagator.

    The cumulant sum over set partitions is used, with block moments from
    Pfaffians of sub-propagators. Arguments must be even; an odd total degree
    gives exact zero.
    """
    if len(monomials) == 0:
        raise GrassmannError("truncated expectation needs at least one argument")
    G = as_antisymmetric(propagator, tol=1e-10)
    total_parity = 0
    for X in monomials:
        if X.generator_count != G.shape[0]:
            raise GrassmannError("argument and propagator live on different generator sets")
        parities = {popcount(m) % 2 for m in X.terms}
        if len(parities) > 1:
            raise GrassmannError("arguments must have definite parity")
        total_parity += parities.pop() if parities else 0
    if total_parity % 2:
        return 0j
    if any(X.has_odd_part() for X in monomials):
        raise GrassmannError("odd arguments are not supported; pass even monomials")

    def moment(block):
        prod = monomials[block[0]]
        for i in block[1:]:
            prod = multiply(prod, monomials[i])
        return expectation(prod, G)

    return complex(joint_cumulant(len(monomials), moment))


def propagator_from_action(A: MatrixLike) -> np.ndarray:
    """Propagator G = A^{-1} of the Gaussian measure exp(-1/2 theta^T A theta)."""
    M = as_antisymmetric(A)
    G = np.linalg.inv(M)
    return 0.5 * (G - G.T)


def normalized_expectation(p: GrassmannPolynomial, A: MatrixLike) -> complex:
    """Berezin-evaluated <p> = int p e^S / int e^S with S = -1/2 theta^T A theta."""
    Z = pfaffian(A)
    if Z == 0:
        raise GrassmannError("Gaussian normalization vanishes")
    return gaussian_integral(p, A) / Z


Bilinear = Sequence[tuple]


def bilinear_truncated_expectation(bilinears: Sequence[Bilinear], G: np.ndarray) -> complex:
    """
    Truncated expectation of bilinears given as [(coeff, i, j), ...] meaning sum coeff theta_i theta_j.

    Works on propagators of any size since no polynomial is materialized:
    block moments are Pfaffians of G on the concatenated index lists.
    """
    if len(bilinears) == 0:
        raise GrassmannError("truncated expectation needs at least one argument")
    G = np.asarray(G)

    def moment(block):
        total = 0j
        choices = [bilinears[i] for i in block]

        def recurse(pos, coeff, idx):
            nonlocal total
            if pos == len(choices):
                total += coeff * wick_moment(idx, G)
                return
            for c, i, j in choices[pos]:
                recurse(pos + 1, coeff * c, idx + [i, j])

        recurse(0, 1.0 + 0j, [])
        return total

    return complex(joint_cumulant(len(bilinears), moment))
