"""
Lattice correlation sources for convergence studies.

A source turns (points, bond directions, spacing a) into the lattice value of
<eps_{x1,j1}; ...; eps_{xm,jm}> at the tuned inverse temperature beta(a).
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Sequence, Type

from free_fermion.correlations import free_mpoint_energy_correlation
from lattice.model import BondIndex, ModelSpec, diagonal_interaction
from lattice.monte_carlo import MAX_MC_SIDE, mc_estimate_energy_correlation
from scaling.continuum import ContinuumParams, Point
from scaling.lattice import InfiniteLatticeField, infinite_lattice_energy_correlation, lattice_offset
from scaling.loops import lattice_loop_correlation
from scaling.tuning import tune_beta
from utils.exceptions import ConfigurationError, ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.scaling")


@dataclass
class SourceValue:
    """Lattice value with its statistical error (zero for exact sources)."""

    value: float
    error: float = 0.0


class CorrelationSource(ABC):
    """Lattice m-point energy correlations at spacing a."""

    name = "abstract"

    def __init__(self, params: ContinuumParams, **options):
        self.params = params
        self.options = options

    @property
    def provenance(self) -> str:
        return f"{self.name}:{self.params.provenance}"

    def model_spec(self, a: float, M: int) -> ModelSpec:
        """Model at spacing a with beta tuned to sigma(a) and the source's interaction."""
        beta = tune_beta(a, self.params.sigma_a, self.params.lam, self.params.tc)
        v_table = self.options.get("v_table")
        if v_table is None and self.params.lam != 0.0:
            v_table = diagonal_interaction()
        return ModelSpec(a=a, M=M, beta=beta, lam=self.params.lam, v_table=v_table or {})

    @abstractmethod
    def evaluate(self, points: Sequence[Point], j_labels: Sequence[int], a: float) -> SourceValue:
        pass


def _grid_span(points: Sequence[Point], a: float) -> int:
    offsets = [lattice_offset(x, a) for x in points]
    return max(max(abs(o[0]), abs(o[1])) for o in offsets)


class FreeInfiniteSource(CorrelationSource):
    """Exact nearest-neighbour correlations on the infinite lattice."""

    name = "free"

    def evaluate(self, points, j_labels, a):
        if self.params.lam != 0.0:
            raise ValidationError("the free source requires lambda = 0")
        spec = self.model_spec(a, 2 * _grid_span(points, a) + 2)
        field = InfiniteLatticeField(spec)
        return SourceValue(infinite_lattice_energy_correlation(spec, points, j_labels, field))


class TorusSource(CorrelationSource):
    """Exact nearest-neighbour correlations on the torus of side L = M a with one boundary label."""

    name = "torus"

    def _side(self, a: float) -> int:
        L = float(self.options.get("L", 4.0))
        M = int(round(L / a))
        if abs(M * a - L) > 1e-9 * L:
            raise ValidationError(f"torus side L = {L} is not a multiple of a = {a}")
        return M

    def evaluate(self, points, j_labels, a):
        if self.params.lam != 0.0:
            raise ValidationError("the torus source requires lambda = 0")
        spec = self.model_spec(a, self._side(a))
        bonds = [BondIndex(lattice_offset(x, a), int(j)).wrapped(spec.M) for x, j in zip(points, j_labels)]
        boundary = self.options.get("boundary", (-1, -1))
        return SourceValue(free_mpoint_energy_correlation(spec, bonds, boundary))


class MonteCarloSource(TorusSource):
    """Monte Carlo estimate on the torus; the only source for lambda != 0 beyond the dressed loop."""

    name = "mc"

    def evaluate(self, points, j_labels, a):
        M = self._side(a)
        if M > MAX_MC_SIDE:
            raise ValidationError(f"Monte Carlo source needs L/a <= {MAX_MC_SIDE}, got {M}")
        spec = self.model_spec(a, M)
        bonds = [BondIndex(lattice_offset(x, a), int(j)).wrapped(M) for x, j in zip(points, j_labels)]
        result = mc_estimate_energy_correlation(
            spec, bonds,
            sweeps=int(self.options.get("sweeps", 20000)),
            seed=int(self.options.get("seed", 0)),
            chains=int(self.options.get("chains", 4)),
            threads=int(self.options.get("threads", 1)),
        )
        return SourceValue(result.estimate, result.standard_error)


class DressedLoopSource(CorrelationSource):
    """Loop formula with the dressed lattice propagator: the truncated interacting pipeline."""

    name = "dressed-loop"

    def evaluate(self, points, j_labels, a):
        spec = self.model_spec(a, 2 * _grid_span(points, a) + 2)
        return SourceValue(lattice_loop_correlation(points, j_labels, spec, self.params))


class CorrelationSourceFactory:
    """Factory for lattice correlation sources"""

    def __init__(self):
        self._sources: Dict[str, Type[CorrelationSource]] = {
            "free": FreeInfiniteSource,
            "torus": TorusSource,
            "mc": MonteCarloSource,
            "dressed-loop": DressedLoopSource,
        }

    def get_source(self, source_type: str, params: ContinuumParams, **options) -> CorrelationSource:
        """
        Get a correlation source instance.

        Raises:
            ConfigurationError: If the source type is not registered
        """
        source_class = self._sources.get(source_type)
        if not source_class:
            raise ConfigurationError(f"Unsupported correlation source: {source_type}")
        return source_class(params, **options)

    def register_source(self, source_type: str, source_class: Type[CorrelationSource]) -> None:
        self._sources[source_type] = source_class

    def list_sources(self) -> List[str]:
        return list(self._sources.keys())


def default_source(params: ContinuumParams) -> str:
    """'free' at lambda = 0, otherwise the dressed loop."""
    return "free" if params.lam == 0.0 else "dressed-loop"
