"""
Convergence of lattice m-point energy correlations to the loop formula as a -> 0.

For every a = 2^-N the chosen source gives the lattice value, the continuum
value is the dressed loop sum, and the residual is fitted to C a^theta. The
geometry template (delta/D)^(2 - 2 epsilon) is compared across point sets.
"""

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from scaling.continuum import ContinuumParams, Point
from scaling.lattice import lattice_offset
from scaling.loops import check_labels, check_points, mpoint_scaling_correlation
from scaling.sources import CorrelationSource, CorrelationSourceFactory, default_source
from utils.exceptions import ConvergenceStudyError, GeometryError
from utils.logger import IsingLabLogger
from utils.reporting import write_csv, write_json

logger = IsingLabLogger("isinglab.scaling")

MIN_SCALES = 4
DEFAULT_EPSILON = 0.25
MIN_SEPARATION_STEPS = 2
STUDY_HEADER = ["N", "a", "lattice", "lattice_error", "continuum", "residual"]
TEMPLATE_HEADER = ["geometry", "delta", "diameter", "template", "residual", "scaled_residual"]


@dataclass
class ConvergenceStudy:
    """Residual table of one point geometry with its fitted rate."""

    points: List[Point]
    delta: float
    diameter: float
    theta: float
    epsilon: float = DEFAULT_EPSILON
    table: List[list] = field(default_factory=list)
    monotone: bool = False
    source: str = ""
    provenance: Dict[str, str] = field(default_factory=dict)

    @property
    def residuals(self) -> List[float]:
        return [row[5] for row in self.table]

    def summary(self) -> Dict[str, object]:
        return {
            "points": self.points,
            "delta": self.delta,
            "diameter": self.diameter,
            "theta": self.theta,
            "epsilon": self.epsilon,
            "monotone": self.monotone,
            "source": self.source,
            "provenance": self.provenance,
        }


def geometry(points: Sequence[Point]) -> tuple:
    """(delta, D): minimal and maximal pairwise distance."""
    distances = [math.dist(p, q) for p, q in itertools.combinations(points, 2)]
    return min(distances), max(distances)


def fit_exponent(a_values: Sequence[float], residuals: Sequence[float]) -> float:
    """Slope of log|residual| against log a."""
    x = np.log(np.asarray(a_values, dtype=float))
    y = np.log(np.abs(np.asarray(residuals, dtype=float)))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def bound_template(delta: float, diameter: float, epsilon: float = DEFAULT_EPSILON) -> float:
    return (delta / diameter) ** (2.0 - 2.0 * epsilon)


def _check_representable(points: List[Point], a_values: Sequence[float]) -> None:
    delta, _ = geometry(points)
    coarsest = max(a_values)
    if delta < MIN_SEPARATION_STEPS * coarsest:
        raise GeometryError(
            f"points closer than {MIN_SEPARATION_STEPS} lattice steps at a = {coarsest}: delta = {delta:.6g}")
    for a in a_values:
        for x in points:
            lattice_offset(x, a)


def _source_for(source: Union[str, CorrelationSource, None], params: ContinuumParams, options) -> CorrelationSource:
    if isinstance(source, CorrelationSource):
        return source
    return CorrelationSourceFactory().get_source(source or default_source(params), params, **(options or {}))


def convergence_study(points: Sequence[Point], N_values: Sequence[int], params: ContinuumParams,
                      source: Union[str, CorrelationSource, None] = None, j_labels: Optional[Sequence[int]] = None,
                      epsilon: float = DEFAULT_EPSILON, source_options: Optional[dict] = None) -> ConvergenceStudy:
    """
    Lattice values at a = 2^-N against the continuum loop sum.

    Args:
        points: distinct points in physical units, on every grid
        N_values: at least four scale indices
        params: continuum parameters; sigma_a fixes beta(a)
        source: a registered source name or instance; defaults to 'free' at lambda = 0
        j_labels: bond directions, all 1 when omitted
        epsilon: exponent of the geometry template
        source_options: passed to the source factory

    Raises:
        ConvergenceStudyError: fewer than four scales
        GeometryError: coincident or non-representable points
    """
    N_values = sorted(set(int(n) for n in N_values))
    if len(N_values) < MIN_SCALES:
        raise ConvergenceStudyError(f"a convergence study needs at least {MIN_SCALES} scales, got {len(N_values)}")
    pts = check_points(points)
    labels = check_labels(j_labels if j_labels is not None else [1] * len(pts), len(pts))
    a_values = [2.0 ** -n for n in N_values]
    _check_representable(pts, a_values)
    delta, diameter = geometry(pts)

    src = _source_for(source, params, source_options)
    continuum = mpoint_scaling_correlation(pts, labels, params)
    logger.info(f"Convergence study: m={len(pts)} N={N_values} source={src.name} continuum={continuum:.12g}")

    table = []
    for N, a in tqdm(list(zip(N_values, a_values)), desc="scales", leave=False):
        lattice = src.evaluate(pts, labels, a)
        residual = lattice.value - continuum
        logger.debug(f"N={N}: lattice={lattice.value:.12g} residual={residual:.3e}")
        table.append([N, a, lattice.value, lattice.error, continuum, residual])

    magnitudes = [abs(row[5]) for row in table]
    monotone = all(later < earlier for earlier, later in zip(magnitudes, magnitudes[1:]))
    theta = fit_exponent(a_values, [row[5] for row in table])
    if not monotone:
        logger.warning(f"residuals not monotone over N = {N_values}")
    logger.info(f"Fitted exponent theta = {theta:.4f}")
    return ConvergenceStudy(
        points=pts, delta=delta, diameter=diameter, theta=theta, epsilon=epsilon, table=table,
        monotone=monotone, source=src.name,
        provenance={"lattice": src.provenance, "continuum": f"loop-formula:{params.provenance}"},
    )


def template_check(geometries: Sequence[Sequence[Point]], N: int, params: ContinuumParams,
                   source: Union[str, CorrelationSource, None] = None, j_labels: Optional[Sequence[int]] = None,
                   epsilon: float = DEFAULT_EPSILON, source_options: Optional[dict] = None) -> Dict[str, object]:
    """
    Residuals at one spacing across point geometries, ordered by diameter.

    Returns rows (geometry, delta, D, template, residual, residual/template) and
    whether |residual| is non-increasing in D.
    """
    a = 2.0 ** -N
    src = _source_for(source, params, source_options)
    rows = []
    for index, points in enumerate(geometries):
        pts = check_points(points)
        labels = check_labels(j_labels if j_labels is not None else [1] * len(pts), len(pts))
        _check_representable(pts, [a])
        delta, diameter = geometry(pts)
        residual = src.evaluate(pts, labels, a).value - mpoint_scaling_correlation(pts, labels, params)
        template = bound_template(delta, diameter, epsilon)
        rows.append([index, delta, diameter, template, residual, abs(residual) / template])
    rows.sort(key=lambda row: row[2])
    magnitudes = [abs(row[4]) for row in rows]
    non_increasing = all(later <= earlier for earlier, later in zip(magnitudes, magnitudes[1:]))
    return {"rows": rows, "non_increasing": non_increasing, "a": a, "epsilon": epsilon}


def write_study(study: ConvergenceStudy, out_dir: Union[str, Path], stem: str = "scaling") -> List[Path]:
    """Residual table as CSV and the fit summary as JSON."""
    out_dir = Path(out_dir)
    return [
        write_csv(out_dir / f"{stem}.csv", STUDY_HEADER, study.table),
        write_json(out_dir / f"{stem}_summary.json", study.summary()),
    ]
