"""
Convergence diagnostics for the polymer expansion.

    nu0^2 = 4 e^{1 + beta|lambda|/2} (beta|lambda|/2)^{1/(2 M0)},
    e^{-2 kappa0} = (beta|lambda|/2)^{1/(2 M0)}

The expansion is certified when nu0 < 1. Pinned tail sums of the polymer
norms f(gamma) = 4^{|gamma|} max_{R,Y} |zeta(R, Y; gamma)| over polymers through
one bond are compared with the envelope 2 nu0 e^{-kappa0 R / 2}, R in bonds.
"""

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from lattice.model import BondIndex, ModelSpec
from polymer.activities import PolymerArena, max_abs_activity
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger
from utils.reporting import write_json

logger = IsingLabLogger("isinglab.polymer")

TAIL_HEADER = ["R", "tail_sum", "envelope", "within_envelope", "polymers"]


def expansion_constants(spec: ModelSpec) -> Dict[str, float]:
    """nu0 and kappa0 of the activity bound."""
    x = 0.5 * spec.beta * abs(spec.lam)
    if x == 0.0 or spec.M0 == 0:
        return {"nu0": 0.0, "kappa0": math.inf}
    root = x ** (1.0 / (2 * spec.M0))
    nu0 = math.sqrt(4.0 * math.exp(1.0 + x) * root)
    kappa0 = -0.5 * math.log(root)
    return {"nu0": nu0, "kappa0": kappa0}


@dataclass
class TailRow:
    R: int
    tail_sum: float
    envelope: float
    polymers: int

    @property
    def within_envelope(self) -> bool:
        return self.tail_sum <= self.envelope


@dataclass
class ConvergenceReport:
    nu0: float
    kappa0: float
    certified: bool
    root: BondIndex
    max_size: int
    tail: List[TailRow] = field(default_factory=list)
    fitted_rate: Optional[float] = None

    @property
    def rate_ok(self) -> Optional[bool]:
        if self.fitted_rate is None:
            return None
        return self.fitted_rate >= 0.5 * self.kappa0

    def rows(self) -> List[list]:
        return [[r.R, r.tail_sum, r.envelope, r.within_envelope, r.polymers] for r in self.tail]

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["root"] = [self.root.x[0], self.root.x[1], self.root.j]
        data["tail"] = [dict(zip(TAIL_HEADER, row)) for row in self.rows()]
        data["rate_ok"] = self.rate_ok
        data["kappa0"] = None if math.isinf(self.kappa0) else self.kappa0
        return data


def fitted_decay_rate(sizes: List[int], tails: List[float]) -> Optional[float]:
    """Minus the least-squares slope of log(tail) against R."""
    points = [(r, math.log(v)) for r, v in zip(sizes, tails) if v > 0.0]
    if len(points) < 2:
        return None
    xs, ys = np.array(points).T
    slope = np.polyfit(xs, ys, 1)[0]
    return float(-slope)


def convergence_diagnostic(spec: ModelSpec, root: BondIndex = BondIndex((0, 0), 1), max_size: int = 5,
                           arena: Optional[PolymerArena] = None) -> ConvergenceReport:
    """
    nu0, kappa0 and the pinned tail table at one bond.

    Tail sums are lower estimates: polymers beyond max_size bonds are not
    enumerated. An uncertified expansion is reported, not raised.
    """
    if max_size < 1:
        raise ValidationError("max_size must be positive")
    constants = expansion_constants(spec)
    nu0, kappa0 = constants["nu0"], constants["kappa0"]
    certified = nu0 < 1.0
    report = ConvergenceReport(nu0, kappa0, certified, root.wrapped(spec.M), max_size)
    if not certified:
        logger.warning(f"expansion not certified: nu0 = {nu0:.4f} >= 1 at beta*lambda = {spec.beta * spec.lam:.3g}")
    if spec.lam == 0.0 or not spec.v_table:
        return report
    if arena is None:
        arena = PolymerArena(spec, max_size=max_size)
    t = spec.t
    norms: Dict[int, List[float]] = {}
    for gamma in arena.through(root):
        if gamma.size > max_size:
            continue
        f = 4.0 ** gamma.size * max_abs_activity(arena.colorings(gamma), t)
        norms.setdefault(gamma.size, []).append(f)
    sizes = list(range(1, max_size + 1))
    tails = []
    for R in sizes:
        values = [f for size, fs in norms.items() if size >= R for f in fs]
        tail = math.fsum(values)
        tails.append(tail)
        envelope = 2.0 * nu0 * math.exp(-0.5 * kappa0 * R)
        report.tail.append(TailRow(R, tail, envelope, len(values)))
    report.fitted_rate = fitted_decay_rate(sizes, tails)
    logger.info(f"nu0 = {nu0:.4f}, kappa0 = {kappa0:.4f}, fitted tail rate {report.fitted_rate}")
    return report


def write_report(report: ConvergenceReport, path: Union[str, Path]) -> Path:
    return write_json(path, report.to_dict())
