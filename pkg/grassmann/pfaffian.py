"""Pfaffians of antisymmetric matrices"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from utils.exceptions import PfaffianError

ANTISYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class AntisymmetricMatrix:
    """Even-dimensional antisymmetric complex matrix (validated on construction)."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", as_antisymmetric(self.entries))

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


MatrixLike = Union[np.ndarray, AntisymmetricMatrix]


def as_antisymmetric(A: MatrixLike, tol: float = ANTISYMMETRY_TOL, require_even: bool = True) -> np.ndarray:
    """Validate and return a complex copy with an exactly zero diagonal."""
    if isinstance(A, AntisymmetricMatrix):
        return A.entries
    M = np.array(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise PfaffianError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if require_even and n % 2:
        raise PfaffianError(f"Pfaffian needs an even dimension, got {n}")
    scale = max(1.0, float(np.max(np.abs(M)))) if n else 1.0
    if n and np.max(np.abs(M + M.T)) > tol * scale:
        raise PfaffianError(f"matrix is not antisymmetric (max |A + A^T| = {np.max(np.abs(M + M.T)):.3e})")
    np.fill_diagonal(M, 0.0)
    return M


def pfaffian(A: MatrixLike, tol: float = ANTISYMMETRY_TOL) -> complex:
    """
    Pfaffian by skew-symmetric tridiagonalization with partial pivoting.

    Each step eliminates one pair of rows/columns with a Gauss transform
    that preserves antisymmetry; row swaps flip the sign.
    """
    M = as_antisymmetric(A, tol).copy()
    n = M.shape[0]
    if n == 0:
        return 1.0 + 0j
    value = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(M[k + 1:, k])))
        if kp != k + 1:
            M[[k + 1, kp], k:] = M[[kp, k + 1], k:]
            M[k:, [k + 1, kp]] = M[k:, [kp, k + 1]]
            value = -value
        pivot = M[k, k + 1]
        if pivot == 0:
            return 0j
        value *= pivot
        if k + 2 < n:
            tau = M[k, k + 2:] / pivot
            column = M[k + 2:, k + 1].copy()
            M[k + 2:, k + 2:] += np.outer(tau, column) - np.outer(column, tau)
    return complex(value)


def pfaffian_cofactor(A: MatrixLike) -> complex:
    """Recursive expansion along the first row; test oracle for n <= 8."""
    M = as_antisymmetric(A)
    n = M.shape[0]
    if n > 8:
        raise PfaffianError("cofactor expansion is only used up to 8x8")
    return _cofactor(M)


def _cofactor(M: np.ndarray) -> complex:
    n = M.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for j in range(1, n):
        if M[0, j] == 0:
            continue
        keep = [i for i in range(n) if i not in (0, j)]
        sign = 1 if j % 2 == 1 else -1
        total += sign * M[0, j] * _cofactor(M[np.ix_(keep, keep)])
    return total


def sub_pfaffian(A: np.ndarray, indices) -> complex:
    """Pfaffian of the principal submatrix on ``indices`` (in the given order)."""
    idx = list(indices)
    if not idx:
        return 1.0 + 0j
    if len(idx) % 2:
        return 0j
    return pfaffian(A[np.ix_(idx, idx)], tol=np.inf)


def random_antisymmetric(n: int, rng: np.random.Generator, complex_entries: bool = False) -> np.ndarray:
    """Random antisymmetric matrix with O(1) entries."""
    X = rng.standard_normal((n, n))
    if complex_entries:
        X = X + 1j * rng.standard_normal((n, n))
    return X - X.T
