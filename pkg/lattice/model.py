"""
Model parameters and torus geometry for the perturbed Ising model.

Sites are labelled by integer coordinates (x1, x2) in lattice units, with
site index x1 * M + x2. Bonds are (x, j) with j in {1, 2}, joining x and
x + e_j on the torus.
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Offset = Tuple[int, int]

SYMMETRY_TOL = 1e-12


def _orbit(offset: Offset) -> List[Offset]:
    """Images of an offset under the eight rotations/reflections of the square lattice."""
    d1, d2 = offset
    images = set()
    for a, b in ((d1, d2), (d2, d1)):
        for s1 in (1, -1):
            for s2 in (1, -1):
                images.add((s1 * a, s2 * b))
    return sorted(images)


def symmetric_interaction(representatives: Dict[Offset, float], normalize: bool = True) -> Dict[Offset, float]:
    """Expand orbit representatives to a full symmetric table, normalized so that 1/2 sum |v| = 1."""
    table: Dict[Offset, float] = {}
    for offset, value in representatives.items():
        for image in _orbit(tuple(offset)):
            table[image] = float(value)
    if normalize:
        norm = 0.5 * sum(abs(v) for v in table.values())
        if norm > 0:
            table = {k: v / norm for k, v in table.items()}
    return table


def diagonal_interaction() -> Dict[Offset, float]:
    """Diagonal-neighbour interaction v(+-1, +-1) = 1/2."""
    return symmetric_interaction({(1, 1): 1.0})


class ModelSpec(BaseModel):
    """Lattice spacing, side, couplings and interaction table: the single source of truth."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, arbitrary_types_allowed=True)

    a: float = Field(1.0, gt=0.0, description="lattice spacing, a = 2^-N")
    M: int = Field(..., ge=2, description="sites per side")
    J: float = Field(1.0, gt=0.0)
    beta: float = Field(..., ge=0.0)
    lam: float = Field(0.0, alias="lambda")
    v_table: Dict[Offset, float] = Field(default_factory=dict)

    @field_validator("v_table", mode="before")
    @classmethod
    def _parse_table(cls, value):
        if value is None:
            return {}
        if isinstance(value, list):
            out = {}
            for entry in value:
                out[tuple(int(c) for c in entry["offset"])] = float(entry["value"])
            return out
        if isinstance(value, dict):
            out = {}
            for key, v in value.items():
                if isinstance(key, str):
                    key = tuple(int(c) for c in key.replace("(", "").replace(")", "").split(","))
                out[tuple(int(c) for c in key)] = float(v)
            return out
        raise ValueError("v_table must be a mapping or a list of {offset, value} entries")

    @model_validator(mode="after")
    def _check_table(self):
        table = {k: v for k, v in self.v_table.items() if v != 0.0}
        if not table:
            return self
        for (d1, d2), value in table.items():
            if (d1, d2) == (0, 0):
                raise ValueError("v(0) must vanish")
            if abs(d1) + abs(d2) == 1:
                raise ValueError("v must vanish on nearest-neighbour offsets")
            for image in _orbit((d1, d2)):
                if abs(self.v_table.get(image, 0.0) - value) > SYMMETRY_TOL:
                    raise ValueError(f"v_table not invariant under lattice symmetries at {image}")
        norm = 0.5 * sum(abs(v) for v in table.values())
        if abs(norm - 1.0) > SYMMETRY_TOL:
            raise ValueError(f"v_table must satisfy 1/2 sum |v| = 1, got {norm:.15g}")
        return self

    # Derived quantities

    @property
    def L(self) -> float:
        return self.a * self.M

    @property
    def t(self) -> float:
        return math.tanh(self.beta * self.J)

    @property
    def N(self) -> Optional[int]:
        """Scale index with a = 2^-N, or None when a is not a power of two."""
        n = -math.log2(self.a)
        return int(round(n)) if abs(n - round(n)) < 1e-12 else None

    @property
    def M0(self) -> int:
        """Interaction range in lattice steps (l1 length of the longest offset)."""
        return max((abs(d1) + abs(d2) for (d1, d2), v in self.v_table.items() if v != 0.0), default=0)

    @property
    def R0(self) -> float:
        """Euclidean interaction range in lattice units."""
        return max((math.hypot(d1, d2) for (d1, d2), v in self.v_table.items() if v != 0.0), default=0.0)

    @property
    def sites(self) -> int:
        return self.M * self.M

    @property
    def minimal_image_degenerate(self) -> bool:
        """True when 2 R0 >= L in lattice units, i.e. the minimal-image convention matters."""
        return self.lam != 0.0 and 2 * self.R0 >= self.M

    def v(self, offset: Offset) -> float:
        return self.v_table.get(tuple(offset), 0.0)

    def with_updates(self, **changes) -> "ModelSpec":
        data = self.model_dump(by_alias=False)
        data.update(changes)
        return ModelSpec(**data)


@dataclass(frozen=True, order=True)
class BondIndex:
    """Bond (x, j) joining site x and x + e_j."""

    x: Tuple[int, int]
    j: int

    def __post_init__(self):
        if self.j not in (1, 2):
            raise ValueError(f"bond direction must be 1 or 2, got {self.j}")

    def wrapped(self, M: int) -> "BondIndex":
        return BondIndex((self.x[0] % M, self.x[1] % M), self.j)

    def shifted(self, shift: Offset, M: int) -> "BondIndex":
        return BondIndex(((self.x[0] + shift[0]) % M, (self.x[1] + shift[1]) % M), self.j)

    def endpoints(self, M: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        x1, x2 = self.x[0] % M, self.x[1] % M
        if self.j == 1:
            return (x1, x2), ((x1 + 1) % M, x2)
        return (x1, x2), (x1, (x2 + 1) % M)

    def index(self, M: int) -> int:
        x1, x2 = self.x[0] % M, self.x[1] % M
        return 2 * (x1 * M + x2) + (self.j - 1)

    @classmethod
    def from_index(cls, index: int, M: int) -> "BondIndex":
        site, j = divmod(index, 2)
        return cls(divmod(site, M), j + 1)


@dataclass(frozen=True)
class SpinConfiguration:
    """Spin configuration as a bitmask over M^2 sites (bit set means sigma = +1)."""

    spins: int
    M: int

    def __post_init__(self):
        if self.spins < 0 or self.spins >= 1 << (self.M * self.M):
            raise ValueError("spin mask longer than M^2 sites")

    def sigma(self, site: Tuple[int, int]) -> int:
        idx = site_index(site, self.M)
        return 1 if (self.spins >> idx) & 1 else -1

    def as_list(self) -> List[int]:
        return [1 if (self.spins >> i) & 1 else -1 for i in range(self.M * self.M)]

    @classmethod
    def from_list(cls, values: Iterable[int], M: int) -> "SpinConfiguration":
        mask = 0
        for i, s in enumerate(values):
            if s not in (1, -1):
                raise ValueError("spins must be +1 or -1")
            if s == 1:
                mask |= 1 << i
        return cls(mask, M)


def site_index(site: Tuple[int, int], M: int) -> int:
    return (site[0] % M) * M + (site[1] % M)


def minimal_image(d: int, M: int) -> int:
    """Representative of d mod M in (-M/2, M/2]."""
    r = d % M
    return r - M if r > M // 2 else r


def all_bonds(M: int) -> List[BondIndex]:
    """The 2 M^2 bonds in index order."""
    return [BondIndex.from_index(i, M) for i in range(2 * M * M)]


@dataclass(frozen=True)
class InteractingPair:
    x: int
    y: int
    offset: Offset
    value: float


def interacting_pairs(spec: ModelSpec) -> List[InteractingPair]:
    """
    Unordered pairs {x, y}, x != y, with v evaluated on the minimal-image offset.

    The stored offset is the minimal image of y - x.
    """
    M = spec.M
    found: Dict[Tuple[int, int], InteractingPair] = {}
    if spec.lam == 0.0 or not spec.v_table:
        return []
    for x1 in range(M):
        for x2 in range(M):
            x = x1 * M + x2
            for (d1, d2) in spec.v_table:
                y1, y2 = (x1 + d1) % M, (x2 + d2) % M
                y = y1 * M + y2
                if y == x:
                    continue
                key = (min(x, y), max(x, y))
                if key in found:
                    continue
                lo, hi = key
                dm = (minimal_image(hi // M - lo // M, M), minimal_image(hi % M - lo % M, M))
                value = spec.v(dm)
                if value != 0.0:
                    found[key] = InteractingPair(lo, hi, dm, value)
    return [found[k] for k in sorted(found)]


def coupling_matrix(spec: ModelSpec):
    """Symmetric matrix K with H = -sum_{x<y} K_xy sigma_x sigma_y (nearest bonds counted with multiplicity)."""
    n = spec.sites
    K = np.zeros((n, n))
    for bond in all_bonds(spec.M):
        p, q = bond.endpoints(spec.M)
        i, k = site_index(p, spec.M), site_index(q, spec.M)
        K[i, k] += spec.J
        K[k, i] += spec.J
    for pair in interacting_pairs(spec):
        K[pair.x, pair.y] += spec.lam * pair.value
        K[pair.y, pair.x] += spec.lam * pair.value
    return K
