"""
Prior on the per-trait offsets.

Each trait's offset follows N(n0, t0²) and a predictor is included with
probability Φ(offset) (before hotspot propensities). The pair (n0, t0) is
chosen so that the induced number of active predictors per trait has the
requested prior mean and variance.
"""

import logging
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.optimize import brentq
from scipy.special import ndtr

from apps.core.exceptions import InfeasiblePriorError

logger = logging.getLogger(__name__)

QUADRATURE_NODES = 80
N0_BOUNDS = (-10.0, 10.0)
T0_BOUNDS = (1e-4, 10.0)
MOMENT_TOLERANCE = 1e-6


@lru_cache(maxsize=None)
def _nodes(count=QUADRATURE_NODES):
    x, w = hermegauss(count)
    return x, w / np.sqrt(2.0 * np.pi)


def count_moments(n0, t0, p):
    """Mean and variance of the active-predictor count for one trait."""
    x, w = _nodes()
    pi = ndtr(n0 + t0 * x)
    mean_pi = w @ pi
    var_pi = w @ (pi - mean_pi) ** 2
    mean = p * mean_pi
    variance = p * (w @ (pi * (1.0 - pi))) + p * p * var_pi
    return mean, variance


def _offset_mean(t0, p, e_active):
    """n0 matching the expected count for a given t0."""
    lo, hi = N0_BOUNDS

    def gap(n0):
        return count_moments(n0, t0, p)[0] - e_active

    if gap(lo) > 0 or gap(hi) < 0:
        raise InfeasiblePriorError(
            f"No n0 in [{lo}, {hi}] gives {e_active} expected active predictors "
            f"at t0={t0:g}"
        )
    return brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)


def solve_zeta_prior(hyper, p):
    """
    Return (n0, t0).

    The literal pair from ``hyper`` is returned as-is when set. Otherwise
    n0 is solved for the mean at every trial t0 and t0 for the variance, both
    by bracketing root search on moments computed with Gauss-Hermite
    quadrature.
    """
    if hyper.literal_zeta_prior:
        return float(hyper.n0), float(hyper.t0)

    e_active, v_active = hyper.e_active, hyper.v_active
    if not 0 < e_active < p:
        raise InfeasiblePriorError(
            f"e_active must lie in (0, p={p}), got {e_active}",
            params={"e_active": e_active, "p": p},
        )
    if not v_active > 0:
        raise InfeasiblePriorError("v_active must be > 0")

    def variance_gap(t0):
        n0 = _offset_mean(t0, p, e_active)
        return count_moments(n0, t0, p)[1] - v_active

    t_lo, t_hi = T0_BOUNDS
    low_gap = variance_gap(t_lo)
    if abs(low_gap) <= MOMENT_TOLERANCE * max(1.0, v_active):
        n0 = _offset_mean(t_lo, p, e_active)
        logger.debug(f"Offset prior at the binomial limit: n0={n0:.6g}, t0={t_lo:g}")
        return n0, t_lo
    if low_gap > 0:
        raise InfeasiblePriorError(
            f"v_active={v_active} is below the binomial variance of the count "
            f"({v_active + low_gap:.6g})",
            params={"v_active": v_active},
        )
    bracket = None
    previous = t_lo
    for trial in np.geomspace(t_lo, t_hi, 64)[1:]:
        try:
            trial_gap = variance_gap(trial)
        except InfeasiblePriorError:
            break
        if trial_gap >= 0:
            bracket = (previous, trial)
            break
        previous = trial
    if bracket is None:
        raise InfeasiblePriorError(
            f"No t0 in ({t_lo}, {t_hi}] reaches v_active={v_active}",
            params={"v_active": v_active},
        )

    t0 = brentq(variance_gap, *bracket, xtol=1e-13, rtol=1e-13, maxiter=500)
    n0 = _offset_mean(t0, p, e_active)
    logger.debug(f"Offset prior for p={p}: n0={n0:.6g}, t0={t0:.6g}")
    return n0, t0
