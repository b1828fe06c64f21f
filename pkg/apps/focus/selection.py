"""
Which traits get their local factors refreshed in an iteration.

Traits with a high activity score (probability of having at least one
associated predictor) are refreshed more often once the warm-up is over; a
perturbation parameter ε in [0, 1] keeps every trait in play early on and
fades as the fit settles.
"""

import numpy as np

from apps.core.utils import round_half_up

AFE_DELTA_FLOOR = 1e-12
AFIO_IMPROVEMENT_FACTOR = 100.0


def activity_score(local):
    """1 − Π_s (1 − g_st) for one trait, accumulated in log space."""
    return float(activity_scores(np.asarray(local.g)[:, None])[0])


def activity_scores(g):
    """Activity score of every column of a p by q PPI matrix."""
    with np.errstate(divide="ignore"):
        log_none = np.log1p(-np.clip(g, 0.0, 1.0)).sum(axis=0)
    return -np.expm1(log_none)


def perturbation_afe(delta_elbo):
    """Logistic of log ΔL, i.e. ΔL / (1 + ΔL), with ΔL floored at 1e-12."""
    delta = max(float(delta_elbo), AFE_DELTA_FLOOR)
    return delta / (1.0 + delta)


def perturbation_afi(af_iteration, decay=0.95):
    if af_iteration < 1:
        raise ValueError("af_iteration counts from 1")
    return float(decay ** (af_iteration - 1))


def selection_probabilities(scores, epsilon, literal=False):
    """
    ω_t = (1 − ε)·a_t + ε, or the alternative ω_t = (1 − ε) + a_t·ε when
    ``literal`` is set.
    """
    scores = np.asarray(scores, dtype=float)
    if literal:
        omega = (1.0 - epsilon) + scores * epsilon
    else:
        omega = (1.0 - epsilon) * scores + epsilon
    return np.clip(omega, 0.0, 1.0)


def draw_focus_set(omega, streams):
    """
    Independent Bernoulli(ω_t) draws, trait t using its own stream. An empty
    draw selects the trait with the largest ω (lowest index on ties).
    """
    omega = np.asarray(omega, dtype=float)
    uniforms = np.fromiter((stream.random() for stream in streams), float, len(streams))
    selected = uniforms < omega
    if not selected.any():
        selected[int(np.argmax(omega))] = True
    return selected


def rf_focus_set(q, fraction, stream):
    """Uniform subset of exactly round(fraction·q) traits (at least one)."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    size = min(q, max(1, round_half_up(fraction * q)))
    selected = np.zeros(q, dtype=bool)
    selected[stream.choice(q, size=size, replace=False)] = True
    return selected


def afio_should_eval_elbo(focus_state):
    return focus_state.af_iteration % focus_state.elbo_eval_gap == 0


def afio_threshold(focus_state, tol):
    """
    Improvement below which the evaluation gap halves: 100·tol at the
    initial gap, scaled by the square of the gap's share of it.
    """
    share = focus_state.elbo_eval_gap / focus_state.initial_gap
    return AFIO_IMPROVEMENT_FACTOR * tol * share**2


def afio_adjust_gap(focus_state, improvement, tol):
    """
    Halve the evaluation gap (floor 1) when the per-iteration ELBO
    improvement falls below ``afio_threshold``. The gap never grows.
    """
    if focus_state.elbo_eval_gap > 1 and improvement < afio_threshold(
        focus_state, tol
    ):
        focus_state.elbo_eval_gap = max(1, focus_state.elbo_eval_gap // 2)
    return focus_state.elbo_eval_gap
