"""
Loop formula for the m-point energy correlations.

    -(1/2m)(i/pi)^m sum_pi sum_omega prod_k omega_k g_{omega_k, -omega_{k+1}}(x_pi(k) - x_pi(k+1))

With T(x)[omega, omega'] = omega g_{omega, -omega'}(x) the omega sum of one
permutation is the trace of the cyclic product of T matrices. Cyclic
rotations give equal traces, so only permutations fixing the first point are
summed and the 1/(2m) becomes 1/2.
"""

import math
from itertools import permutations
from typing import Callable, Dict, List, Sequence

import numpy as np

from grassmann.wick import bilinear_truncated_expectation
from lattice.model import ModelSpec
from scaling.continuum import ContinuumParams, Point, continuum_propagator
from scaling.lattice import dressed_lattice_propagator
from utils.exceptions import GeometryError, ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.scaling")

MAX_LOOP_POINTS = 8
GROWTH_HEADER = ["m", "value", "magnitude", "normalized"]

Propagator = Callable[[Point], np.ndarray]

OMEGA = np.diag([1.0, -1.0])
FLIP = np.array([[0.0, 1.0], [1.0, 0.0]])


def check_points(points: Sequence[Point], max_points: int = MAX_LOOP_POINTS) -> List[Point]:
    pts = [(float(p[0]), float(p[1])) for p in points]
    if len(pts) < 2:
        raise ValidationError("loop correlations need at least two points")
    if len(pts) > max_points:
        raise ValidationError(f"loop correlations are limited to m <= {max_points}, got {len(pts)}")
    if len(set(pts)) != len(pts):
        raise GeometryError("loop correlations need non-coinciding points")
    return pts


def check_labels(j_labels: Sequence[int], m: int) -> List[int]:
    labels = [int(j) for j in j_labels]
    if len(labels) != m or any(j not in (1, 2) for j in labels):
        raise ValidationError(f"expected {m} bond directions in {{1, 2}}, got {list(j_labels)}")
    return labels


def _transfer_matrices(points: List[Point], propagator: Propagator) -> np.ndarray:
    m = len(points)
    T = np.zeros((m, m, 2, 2), dtype=complex)
    for i in range(m):
        for j in range(m):
            if i != j:
                d = (points[i][0] - points[j][0], points[i][1] - points[j][1])
                T[i, j] = OMEGA @ propagator(d) @ FLIP
    return T


def loop_traces(points: Sequence[Point], propagator: Propagator,
                max_points: int = MAX_LOOP_POINTS) -> np.ndarray:
    """omega-summed cyclic products, one per permutation with the first point fixed."""
    pts = check_points(points, max_points)
    m = len(pts)
    T = _transfer_matrices(pts, propagator)
    orders = np.array([(0,) + p for p in permutations(range(1, m))])
    product = np.broadcast_to(np.eye(2, dtype=complex), (len(orders), 2, 2)).copy()
    for k in range(m):
        product = product @ T[orders[:, k], orders[:, (k + 1) % m]]
    return np.trace(product, axis1=1, axis2=2)


def loop_sum(points: Sequence[Point], propagator: Propagator, max_points: int = MAX_LOOP_POINTS) -> float:
    traces = loop_traces(points, propagator, max_points)
    m = len(points)
    total = -0.5 * (1j / math.pi) ** m * traces.sum()
    if abs(total.imag) > 1e-8 * max(1.0, abs(total.real)):
        logger.warning(f"loop sum has imaginary part {total.imag:.3e}")
    return float(total.real)


def mpoint_scaling_correlation(points: Sequence[Point], j_labels: Sequence[int], params: ContinuumParams,
                               dressed: bool = True, max_points: int = MAX_LOOP_POINTS) -> float:
    """
    Scaling limit of <eps_{x1,j1}; ...; eps_{xm,jm}> from the continuum propagator.

    The bond directions are validated but do not enter the value.
    """
    check_labels(j_labels, len(points))
    return loop_sum(points, lambda x: continuum_propagator(x, params, dressed), max_points)


def lattice_loop_correlation(points: Sequence[Point], j_labels: Sequence[int], spec: ModelSpec,
                             params: ContinuumParams, max_points: int = MAX_LOOP_POINTS) -> float:
    """The same loop sum with the dressed lattice propagator at spacing spec.a."""
    check_labels(j_labels, len(points))
    cache: Dict[Point, np.ndarray] = {}

    def propagator(x):
        key = (round(x[0] / spec.a), round(x[1] / spec.a))
        if key not in cache:
            cache[key] = dressed_lattice_propagator(x, spec, params)
        return cache[key]

    return loop_sum(points, propagator, max_points)


def wick_correlation(points: Sequence[Point], propagator: Propagator) -> float:
    """
    (-i/pi)^m E^T(psi_+ psi_-; ...; psi_+ psi_-) by Pfaffian cumulants.

    Generators are ordered (psi_{x1,+}, psi_{x1,-}, psi_{x2,+}, ...); pairs at a
    common point only enter disconnected terms and are set to zero.
    """
    pts = check_points(points)
    m = len(pts)
    G = np.zeros((2 * m, 2 * m), dtype=complex)
    for i in range(m):
        for j in range(m):
            if i != j:
                d = (pts[i][0] - pts[j][0], pts[i][1] - pts[j][1])
                G[2 * i:2 * i + 2, 2 * j:2 * j + 2] = propagator(d)
    bilinears = [[(1.0, 2 * i, 2 * i + 1)] for i in range(m)]
    value = (-1j / math.pi) ** m * bilinear_truncated_expectation(bilinears, G)
    return float(value.real)


def regular_polygon(m: int, side: float = 1.0) -> List[Point]:
    """Vertices of a regular m-gon with the given side; a segment for m = 2."""
    radius = side / (2.0 * math.sin(math.pi / m))
    return [(radius * math.cos(2 * math.pi * k / m), radius * math.sin(2 * math.pi * k / m)) for k in range(m)]


def combinatorial_growth(params: ContinuumParams, m_values: Sequence[int] = (2, 3, 4), side: float = 1.0) -> List[list]:
    """
    Loop values on regular polygons with the sum of |traces| normalized by m!/side^m.

    Rows (m, value, magnitude, normalized); normalized <= 1 is the constant-one
    form of the m! growth of the dominant term.
    """
    rows = []
    for m in m_values:
        points = regular_polygon(m, side)
        traces = loop_traces(points, lambda x: continuum_propagator(x, params))
        value = float((-0.5 * (1j / math.pi) ** m * traces.sum()).real)
        magnitude = 0.5 * math.pi ** (-m) * float(np.abs(traces).sum())
        rows.append([m, value, magnitude, magnitude * side ** m / math.factorial(m)])
    return rows
