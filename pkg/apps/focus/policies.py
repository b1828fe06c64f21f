"""
Per-scheme focus policies used by the fit loop.

A policy decides, for each post-warm-up iteration, which traits are
refreshed and whether the ELBO is evaluated. Policies are plain classes
looked up in ``POLICIES`` so they work unchanged inside worker processes.
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.db import models

from .selection import (
    activity_scores,
    afio_adjust_gap,
    afio_should_eval_elbo,
    draw_focus_set,
    perturbation_afe,
    perturbation_afi,
    rf_focus_set,
    selection_probabilities,
)
from .state import FocusState

logger = logging.getLogger(__name__)


class Scheme(models.TextChoices):
    VANILLA = "vanilla", "Vanilla CAVI"
    RF = "rf", "Random focus"
    AFE = "afe", "Adaptive focus, ELBO-driven"
    AFI = "afi", "Adaptive focus, iteration-driven"
    AFIO = "afio", "Adaptive focus, intermittent ELBO"


@dataclass(frozen=True)
class FocusTraceRow:
    iteration: int
    epsilon: float
    n_selected: int
    mean_omega: float
    elbo_evaluated: bool


class FocusPolicy:
    """Vanilla behaviour: every trait, ELBO every iteration."""

    scheme = Scheme.VANILLA

    def __init__(self, config, hyper, q):
        self.config = config
        self.hyper = hyper
        self.q = q
        self.focus = FocusState.initial(q, config.seed, hyper.afio_initial_gap)
        self.evaluations = []

    def select(self, state):
        self.focus.af_iteration += 1
        return np.arange(self.q)

    def should_evaluate(self, warmup):
        return True

    def record_elbo(self, iteration, elbo, warmup):
        self.evaluations.append((iteration, elbo, warmup))

    def trace_row(self, iteration, n_selected, evaluated, warmup):
        if warmup:
            return FocusTraceRow(iteration, 1.0, n_selected, 1.0, evaluated)
        return FocusTraceRow(
            iteration,
            float(self.focus.epsilon),
            n_selected,
            float(np.mean(self.focus.omega)),
            evaluated,
        )


class RandomFocusPolicy(FocusPolicy):
    scheme = Scheme.RF

    def select(self, state):
        self.focus.af_iteration += 1
        self.focus.selected = rf_focus_set(
            self.q, self.config.rf_fraction, self.focus.rf_stream
        )
        self.focus.omega = np.full(self.q, self.config.rf_fraction)
        return np.flatnonzero(self.focus.selected)


class AdaptiveFocusPolicy(FocusPolicy):
    """Shared draw: scores from the current PPIs, ε from ``epsilon()``."""

    def epsilon(self):
        raise NotImplementedError

    def select(self, state):
        focus = self.focus
        focus.af_iteration += 1
        focus.scores = activity_scores(state.g)
        focus.epsilon = self.epsilon()
        focus.omega = selection_probabilities(
            focus.scores, focus.epsilon, literal=self.config.elbo_formula_literal
        )
        focus.selected = draw_focus_set(focus.omega, focus.streams)
        return np.flatnonzero(focus.selected)


class ElboFocusPolicy(AdaptiveFocusPolicy):
    scheme = Scheme.AFE

    def epsilon(self):
        if len(self.evaluations) < 2:
            return 1.0
        (i_prev, l_prev, _), (i_last, l_last, _) = self.evaluations[-2:]
        return perturbation_afe((l_last - l_prev) / (i_last - i_prev))


class IterationFocusPolicy(AdaptiveFocusPolicy):
    scheme = Scheme.AFI

    def epsilon(self):
        return perturbation_afi(self.focus.af_iteration, self.config.afi_decay)


class IntermittentFocusPolicy(IterationFocusPolicy):
    """AFI selection with ELBO evaluations on a shrinking gap after warm-up."""

    scheme = Scheme.AFIO

    def should_evaluate(self, warmup):
        return not warmup and afio_should_eval_elbo(self.focus)

    def record_elbo(self, iteration, elbo, warmup):
        previous = [e for e in self.evaluations if not e[2]]
        if previous and not warmup:
            i_prev, l_prev, _ = previous[-1]
            gap = afio_adjust_gap(
                self.focus, (elbo - l_prev) / (iteration - i_prev), self.hyper.tol
            )
            logger.debug(f"AFIO evaluation gap now {gap} at iteration {iteration}")
        super().record_elbo(iteration, elbo, warmup)


POLICIES = {
    Scheme.VANILLA: FocusPolicy,
    Scheme.RF: RandomFocusPolicy,
    Scheme.AFE: ElboFocusPolicy,
    Scheme.AFI: IterationFocusPolicy,
    Scheme.AFIO: IntermittentFocusPolicy,
}


def make_policy(config, hyper, q):
    return POLICIES[Scheme(config.scheme)](config, hyper, q)
