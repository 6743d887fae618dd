"""Inverse temperature tuned so that the rescaled mass sigma(a) takes a prescribed value."""

import math
from typing import Optional

from free_fermion.momentum import T_CRITICAL
from utils.exceptions import ValidationError
from utils.logger import IsingLabLogger

logger = IsingLabLogger("isinglab.scaling")


def tune_t(a: float, sigma_target: float, tc_lambda: Optional[float] = None) -> float:
    """
    t = tanh(beta J) solving sigma = (2/a)(t_c(0)/t_c(lambda))(t - t_c(lambda))/t.

    Closed form t = t_c / (1 - (t_c/t_c(0)) a sigma / 2).
    """
    if a <= 0.0:
        raise ValidationError(f"lattice spacing must be positive, got {a}")
    if not math.isfinite(sigma_target):
        raise ValidationError("sigma(a) must be finite")
    tc = T_CRITICAL if tc_lambda is None else float(tc_lambda)
    if not 0.0 < tc < 1.0:
        raise ValidationError(f"t_c(lambda) must lie in (0, 1), got {tc}")
    shift = (tc / T_CRITICAL) * a * sigma_target / 2.0
    if shift >= 1.0:
        raise ValidationError(f"no temperature realizes sigma = {sigma_target} at a = {a}")
    t = tc / (1.0 - shift)
    if not 0.0 < t < 1.0:
        raise ValidationError(f"sigma = {sigma_target} at a = {a} needs t = {t:.6g} outside (0, 1)")
    return t


def tune_beta(a: float, sigma_target: float, lam: float = 0.0, tc_lambda: Optional[float] = None,
              J: float = 1.0) -> float:
    """
    beta = atanh(t)/J for the tuned t.

    Args:
        a: lattice spacing
        sigma_target: rescaled mass sigma(a); zero gives beta_c(lambda)
        lam: perturbation strength, used only to insist on t_c(lambda) when lambda != 0
        tc_lambda: critical t of the perturbed model; t_c(0) = sqrt(2) - 1 when omitted
        J: nearest-neighbour coupling
    """
    if lam != 0.0 and tc_lambda is None:
        logger.warning(f"tune_beta at lambda = {lam} without t_c(lambda); using the unperturbed t_c")
    t = tune_t(a, sigma_target, tc_lambda)
    beta = math.atanh(t) / J
    logger.debug(f"tuned beta = {beta:.12g} (t = {t:.12g}) for a = {a}, sigma = {sigma_target}")
    return beta
