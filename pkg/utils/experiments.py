"""Validated parameter blocks for the command-line experiments"""

from typing import Any, Dict, List, Optional, Tuple, Type

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError, field_validator

from free_fermion.momentum import BETA_CRITICAL
from lattice.enumeration import MAX_ENUMERATION_SIDE
from lattice.model import BondIndex, all_bonds, diagonal_interaction
from utils.exceptions import ConfigurationError

BondTriple = Tuple[int, int, int]


def _bonds(triples) -> List[BondIndex]:
    return [BondIndex((int(x1), int(x2)), int(j)) for x1, x2, j in triples]


class Experiment(BaseModel):
    """Base block: unknown keys are configuration mistakes."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class RunSettings(Experiment):
    model_config = ConfigDict(extra="ignore", frozen=True)

    seed: int = Field(0, ge=0, lt=2 ** 64)
    threads: int = Field(1, ge=1)


class NumericsSettings(Experiment):
    model_config = ConfigDict(extra="ignore", frozen=True)

    grassmann_prune: float = Field(1e-15, ge=0.0)
    grassmann_max_generators: int = Field(40, ge=1, le=64)
    max_enumeration_side: int = Field(MAX_ENUMERATION_SIDE, ge=2, le=MAX_ENUMERATION_SIDE)


class ExactExperiment(Experiment):
    """Spin enumeration against the four-Pfaffian formula on a beta sweep."""

    M: int = Field(3, ge=2, le=5)
    betas: List[float] = Field(default_factory=lambda: [0.0, 0.2, 0.3, BETA_CRITICAL, 0.6], min_length=1)
    bonds: List[BondTriple] = Field(default_factory=lambda: [(0, 0, 1), (1, 1, 2)], min_length=2)
    tolerance: float = Field(1e-9, gt=0.0)

    @field_validator("betas")
    @classmethod
    def _non_negative(cls, value):
        if any(b < 0.0 for b in value):
            raise ValueError("beta values must be non-negative")
        return value

    def bond_indices(self) -> List[BondIndex]:
        return _bonds(self.bonds)


class MonteCarloExperiment(Experiment):
    """Monte Carlo energy correlation checked against an exact reference."""

    M: int = Field(4, ge=2, le=8)
    beta: float = Field(0.3, ge=0.0)
    bonds: List[BondTriple] = Field(default_factory=lambda: [(0, 0, 1), (2, 0, 1)], min_length=1)
    sweeps: int = Field(20000, ge=1000)
    chains: int = Field(4, ge=1)
    error_bars: float = Field(4.0, gt=0.0, description="allowed deviation in standard errors")
    trace: bool = False

    def bond_indices(self) -> List[BondIndex]:
        return _bonds(self.bonds)


class FreeExperiment(Experiment):
    """Free two-point table, its decay and the lattice symmetries."""

    M: int = Field(4, ge=2, le=8)
    beta: float = Field(0.4, ge=0.0)
    a: float = Field(1.0, gt=0.0)
    base: BondTriple = (0, 0, 1)
    separations: List[int] = Field(default_factory=lambda: [1, 2], min_length=1)
    boundary: str = "combined"
    transformations: List[int] = Field(default_factory=lambda: [1, 2, 3, 4])
    enumeration_check: bool = True
    tolerance: float = Field(1e-9, gt=0.0)

    def base_bond(self) -> BondIndex:
        return _bonds([self.base])[0]


class PolymerExperiment(Experiment):
    """Hard-core polymer sum on the 2x2 torus against enumeration."""

    M: int = Field(2, ge=2, le=3)
    beta: float = Field(0.3, ge=0.0)
    lambdas: List[float] = Field(default_factory=lambda: [0.0, 0.02, -0.02, 0.05, -0.05, 0.1, -0.1], min_length=1)
    v_table: Optional[Dict[Any, float]] = None
    tolerance: float = Field(1e-9, gt=0.0)
    odd_check: bool = True
    diagnostic_size: int = Field(3, ge=1)
    source_bonds: Optional[List[BondTriple]] = Field(None, min_length=1)
    derivative_tolerance: float = Field(1e-8, gt=0.0)
    kernel_truncation: Tuple[int, int] = (2, 4)

    def interaction(self) -> Dict:
        return self.v_table if self.v_table else diagonal_interaction()

    def source_bond_indices(self) -> List[BondIndex]:
        """Bonds for the A-derivative checks, every bond of the torus by default."""
        return _bonds(self.source_bonds) if self.source_bonds else all_bonds(self.M)


class ScalingExperiment(Experiment):
    """Lattice correlations against the loop formula as a -> 0."""

    points: List[Tuple[float, float]] = Field(default_factory=lambda: [(0.0, 0.0), (0.25, 0.0)], min_length=2)
    N_values: List[int] = Field(default_factory=lambda: [4, 5, 6, 7, 8, 9], min_length=4)
    j_labels: Optional[List[int]] = None
    m_star: float = 0.0
    lam: float = Field(0.0, alias="lambda")
    Zbar: float = 1.0
    Zstar: float = 1.0
    tc: Optional[float] = None
    source: Optional[str] = None
    source_options: Dict[str, Any] = Field(default_factory=dict)
    epsilon: float = Field(0.25, gt=0.0, lt=1.0)
    theta_min: float = 0.8
    require_monotone: bool = True

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class BetaFamily(Experiment):
    family: str = "geometric"
    params: Dict[str, Any] = Field(default_factory=dict)


class NuFixedPoint(Experiment):
    c: float = 0.1
    theta: float = Field(0.5, gt=0.0)
    kappa: float = 0.0
    depth: int = Field(80, ge=1)
    expected: Optional[float] = None
    tolerance: float = Field(1e-10, gt=0.0)


class TreeCount(Experiment):
    h: int = 0
    N: int = 2
    n: int = Field(2, ge=0)
    m: int = Field(1, ge=0)


class RGExperiment(Experiment):
    """Running coupling flow, the nu fixed point and GN bookkeeping."""

    N: int = Field(6, ge=1)
    M: int = Field(32, ge=4)
    sigma: float = 0.5
    lam: float = Field(0.0, alias="lambda")
    eps0: float = Field(0.5, gt=0.0)
    beta: BetaFamily = Field(default_factory=BetaFamily)
    nu: NuFixedPoint = Field(default_factory=NuFixedPoint)
    trees: TreeCount = Field(default_factory=TreeCount)
    one_loop: bool = False

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("sigma")
    @classmethod
    def _nonzero(cls, value):
        if value == 0.0:
            raise ValueError("sigma must be non-zero; the scale h_sigma is undefined at sigma = 0")
        return value


class CompareExperiment(Experiment):
    """Enumeration, Pfaffian correlations and Monte Carlo on one small torus."""

    M: int = Field(3, ge=2, le=5)
    beta: float = Field(0.35, ge=0.0)
    bonds: List[BondTriple] = Field(default_factory=lambda: [(0, 0, 1), (1, 1, 2)], min_length=1)
    sweeps: int = Field(20000, ge=1000)
    chains: int = Field(4, ge=1)
    error_bars: float = Field(4.0, gt=0.0)
    tolerance: float = Field(1e-9, gt=0.0)

    def bond_indices(self) -> List[BondIndex]:
        return _bonds(self.bonds)


EXPERIMENTS: Dict[str, Type[Experiment]] = {
    "exact": ExactExperiment,
    "mc": MonteCarloExperiment,
    "free": FreeExperiment,
    "polymer": PolymerExperiment,
    "scaling": ScalingExperiment,
    "rg": RGExperiment,
    "compare": CompareExperiment,
}


def _field_path(prefix: str, loc) -> str:
    return ".".join([prefix] + [str(part) for part in loc])


def validate_block(model: Type[BaseModel], block: Dict[str, Any], prefix: str) -> BaseModel:
    """
    Validate one configuration block.

    Raises:
        ConfigurationError: naming the dotted field path of the first failure
    """
    try:
        return model.model_validate(block or {})
    except PydanticValidationError as e:
        first = e.errors()[0]
        raise ConfigurationError(f"{_field_path(prefix, first['loc'])}: {first['msg']}")


def load_experiment(command: str, block: Dict[str, Any]) -> Experiment:
    model = EXPERIMENTS.get(command)
    if model is None:
        raise ConfigurationError(f"Unknown command: {command}")
    return validate_block(model, block, command)
