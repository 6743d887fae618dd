"""
Sparse Grassmann polynomials over a finite set of generators.

A monomial is stored as a bitmask; its coefficient refers to the generators
written in ascending index order.
"""

import cmath
from types import MappingProxyType
from typing import Dict, Iterable, Mapping, Optional, Sequence, Union

from utils.exceptions import GeneratorMismatchError, GrassmannError

DEFAULT_PRUNE = 1e-15
MAX_GENERATORS = 40

Scalar = Union[int, float, complex]


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def reorder_sign(left: int, right: int) -> int:
    """Sign of rewriting theta_left * theta_right in ascending order (0 if they overlap)."""
    if left & right:
        return 0
    swaps = 0
    rest = right
    while rest:
        low = rest & -rest
        j = low.bit_length() - 1
        swaps += popcount(left >> (j + 1))
        rest ^= low
    return -1 if swaps & 1 else 1


def permutation_sign(sequence: Sequence[int]) -> int:
    """Parity of a sequence of distinct integers relative to ascending order."""
    seq = list(sequence)
    inversions = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inversions += 1
    return -1 if inversions & 1 else 1


class GrassmannPolynomial:
    """Immutable sparse polynomial in anticommuting generators."""

    __slots__ = ("generator_count", "_terms", "prune")

    def __init__(self, generator_count: int, terms: Optional[Mapping[int, Scalar]] = None,
                 prune: float = DEFAULT_PRUNE, max_generators: int = MAX_GENERATORS):
        if generator_count < 0 or generator_count > max_generators:
            raise GrassmannError(
                f"generator count {generator_count} outside supported range [0, {max_generators}]")
        self.generator_count = generator_count
        self.prune = prune
        limit = 1 << generator_count
        clean: Dict[int, complex] = {}
        for mask, coeff in (terms or {}).items():
            if mask < 0 or mask >= limit:
                raise GrassmannError(f"monomial {mask:#x} uses undeclared generators")
            if abs(coeff) > prune:
                clean[mask] = complex(coeff)
        self._terms = clean

    # Constructors

    @classmethod
    def zero(cls, n: int, **kw) -> "GrassmannPolynomial":
        return cls(n, {}, **kw)

    @classmethod
    def constant(cls, n: int, value: Scalar = 1.0, **kw) -> "GrassmannPolynomial":
        return cls(n, {0: value}, **kw)

    @classmethod
    def generator(cls, n: int, index: int, **kw) -> "GrassmannPolynomial":
        return cls.from_indices(n, [index], 1.0, **kw)

    @classmethod
    def from_indices(cls, n: int, indices: Sequence[int], coeff: Scalar = 1.0, **kw) -> "GrassmannPolynomial":
        """coeff * theta_{i1} theta_{i2} ... in the given (not necessarily sorted) order."""
        if len(set(indices)) != len(indices):
            return cls(n, {}, **kw)
        for i in indices:
            if i < 0 or i >= n:
                raise GrassmannError(f"generator {i} not in 0..{n - 1}")
        mask = 0
        for i in indices:
            mask |= 1 << i
        return cls(n, {mask: permutation_sign(indices) * coeff}, **kw)

    # Accessors

    @property
    def terms(self) -> Mapping[int, complex]:
        return MappingProxyType(self._terms)

    def constant_term(self) -> complex:
        return self._terms.get(0, 0j)

    def coefficient(self, indices: Iterable[int]) -> complex:
        """Coefficient of the ascending monomial on ``indices``."""
        mask = 0
        for i in indices:
            mask |= 1 << i
        return self._terms.get(mask, 0j)

    def is_zero(self) -> bool:
        return not self._terms

    def is_even(self) -> bool:
        return all(popcount(m) % 2 == 0 for m in self._terms)

    def has_odd_part(self) -> bool:
        return any(popcount(m) % 2 for m in self._terms)

    def degree(self) -> int:
        return max((popcount(m) for m in self._terms), default=0)

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        shown = sorted(self._terms.items())[:6]
        body = " + ".join(f"({c:.4g})*{m:#x}" for m, c in shown)
        more = " + ..." if len(self._terms) > 6 else ""
        return f"GrassmannPolynomial(n={self.generator_count}, {body or '0'}{more})"

    # Arithmetic

    def _check(self, other: "GrassmannPolynomial") -> None:
        if not isinstance(other, GrassmannPolynomial):
            raise GrassmannError(f"expected GrassmannPolynomial, got {type(other).__name__}")
        if other.generator_count != self.generator_count:
            raise GeneratorMismatchError(
                f"generator sets differ: {self.generator_count} vs {other.generator_count}")

    def _like(self, terms: Mapping[int, Scalar]) -> "GrassmannPolynomial":
        return GrassmannPolynomial(self.generator_count, terms, prune=self.prune)

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = self._like({0: other})
        self._check(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0j) + c
        return self._like(out)

    __radd__ = __add__

    def __neg__(self):
        return self._like({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor: Scalar) -> "GrassmannPolynomial":
        return self._like({m: c * factor for m, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(1.0 / other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, GrassmannPolynomial):
            return NotImplemented
        return self.generator_count == other.generator_count and self._terms == other._terms

    def __hash__(self):
        return hash((self.generator_count, frozenset(self._terms.items())))

    def allclose(self, other: "GrassmannPolynomial", tol: float = 1e-12) -> bool:
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= tol for k in keys)

    def restrict_degree(self, max_degree: int) -> "GrassmannPolynomial":
        return self._like({m: c for m, c in self._terms.items() if popcount(m) <= max_degree})


def multiply(p: GrassmannPolynomial, q: GrassmannPolynomial) -> GrassmannPolynomial:
    """Bilinear, associative product with theta_i theta_j = -theta_j theta_i."""
    p._check(q)
    out: Dict[int, complex] = {}
    for m1, c1 in p._terms.items():
        for m2, c2 in q._terms.items():
            if m1 & m2:
                continue
            sign = reorder_sign(m1, m2)
            key = m1 | m2
            out[key] = out.get(key, 0j) + sign * c1 * c2
    return p._like(out)


def exponential(p: GrassmannPolynomial) -> GrassmannPolynomial:
    """Terminating series sum_k p^k / k! for p with zero constant term."""
    if abs(p.constant_term()) > p.prune:
        raise GrassmannError("exponential requires a polynomial with zero constant term")
    result = GrassmannPolynomial.constant(p.generator_count, 1.0, prune=p.prune)
    term = result
    for k in range(1, p.generator_count + 2):
        term = multiply(term, p).scale(1.0 / k)
        if term.is_zero():
            break
        result = result + term
    return result


def logarithm(p: GrassmannPolynomial) -> GrassmannPolynomial:
    """log(c + X) = log c + sum_k (-1)^(k+1) (X/c)^k / k for nonzero constant c."""
    c = p.constant_term()
    if abs(c) <= p.prune:
        raise GrassmannError("logarithm requires a nonzero constant term")
    x = (p - c).scale(1.0 / c)
    result = GrassmannPolynomial.constant(p.generator_count, cmath.log(c), prune=p.prune)
    power = GrassmannPolynomial.constant(p.generator_count, 1.0, prune=p.prune)
    for k in range(1, p.generator_count + 2):
        power = multiply(power, x)
        if power.is_zero():
            break
        result = result + power.scale((-1) ** (k + 1) / k)
    return result


def berezin_integrate(p: GrassmannPolynomial, order: Optional[Sequence[int]] = None) -> complex:
    """
    Berezin integral with measure d(theta_{order[0]}) ... d(theta_{order[-1]}).

    The innermost differential acts first, so that the integral of
    theta_{order[-1]} ... theta_{order[0]} equals one. ``order`` defaults to
    ascending generator order.
    """
    n = p.generator_count
    if order is None:
        order = list(range(n))
    order = list(order)
    if sorted(order) != list(range(n)):
        raise GrassmannError("integration order must be a permutation of all generators")
    top = p.terms.get((1 << n) - 1, 0j)
    return top * permutation_sign(list(reversed(order)))
