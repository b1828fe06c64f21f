"""
Outer fit loop.

``run_cavi`` alternates local updates on a focus set of traits with a global
update, evaluates the ELBO when the scheme's policy asks for it and stops on
a small per-iteration ELBO change at temperature 1.

Traits outside the focus set skip the coefficient sweep but still get their
noise and offset factors refreshed. A stop signalled on a partial iteration
is only accepted after a confirmation iteration that sweeps every trait and
evaluates the ELBO; a failed confirmation backs off before the next one.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from apps.core.exceptions import FitConfigError
from apps.focus.policies import Scheme, make_policy
from apps.variational.state import init_state, save_checkpoint

from .annealing import annealing_temperature
from .elbo import compute_elbo
from .updates import (
    update_global_factors,
    update_local_factors,
    update_trait_factors,
)

logger = logging.getLogger(__name__)

FREEZABLE = ("global", "noise", "offset")
XR_REFRESH_EVERY = 100
CONFIRM_BACKOFF = 8


@dataclass(frozen=True)
class FitConfig:
    scheme: str = Scheme.VANILLA
    rf_fraction: float = 0.5
    afi_decay: float = 0.95
    seed: int = 0
    elbo_formula_literal: bool = False
    record_trace: bool = False
    freeze: tuple = ()
    checkpoint_every: int = 0
    checkpoint_path: Optional[Path] = None

    def __post_init__(self):
        if self.scheme not in Scheme.values:
            raise FitConfigError(
                f"Unknown scheme {self.scheme!r}",
                params={"scheme": self.scheme},
            )
        if not 0.0 < self.rf_fraction <= 1.0:
            raise FitConfigError(
                "rf_fraction must lie in (0, 1]",
                params={"rf_fraction": self.rf_fraction},
            )
        if not 0.0 < self.afi_decay < 1.0:
            raise FitConfigError(
                "afi_decay must lie in (0, 1)",
                params={"afi_decay": self.afi_decay},
            )
        if self.seed < 0:
            raise FitConfigError(
                "seed must be non-negative", params={"seed": self.seed}
            )
        unknown = set(self.freeze) - set(FREEZABLE)
        if unknown:
            raise FitConfigError(
                f"Cannot freeze {', '.join(sorted(unknown))}",
                params={"freeze": tuple(self.freeze)},
            )
        if self.checkpoint_every < 0:
            raise FitConfigError("checkpoint_every must be non-negative")
        if self.checkpoint_every and self.checkpoint_path is None:
            raise FitConfigError("checkpoint_every needs a checkpoint_path")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    elbo: float
    n_updated: int
    temperature: float


@dataclass(eq=False)
class FitReport:
    ppi: np.ndarray
    beta_mean: np.ndarray
    elbo_trace: list
    iterations: int
    local_update_count: int
    wall_time_total: float
    wall_time_local: float
    wall_time_global: float
    wall_time_elbo: float
    converged: bool
    trace: list = field(default_factory=list)
    focus_trace: list = field(default_factory=list)
    monitor_trace: list = field(default_factory=list)
    final_elbo: float = np.nan
    snp_ids: tuple = ()
    trait_ids: tuple = ()
    scheme: str = Scheme.VANILLA
    seed: int = 0
    state: object = field(default=None, repr=False)

    @property
    def p(self):
        return self.ppi.shape[0]

    @property
    def q(self):
        return self.ppi.shape[1]

    def same_result(self, other):
        """Bitwise equality of everything except the wall-time fields."""
        return (
            np.array_equal(self.ppi, other.ppi)
            and np.array_equal(self.beta_mean, other.beta_mean)
            and self.elbo_trace == other.elbo_trace
            and self.iterations == other.iterations
            and self.local_update_count == other.local_update_count
            and self.converged == other.converged
            and self.focus_trace == other.focus_trace
            and list(map(_trace_key, self.trace)) == list(map(_trace_key, other.trace))
        )


def _trace_key(row):
    elbo = None if np.isnan(row.elbo) else row.elbo
    return row.iteration, elbo, row.n_updated, row.temperature


def run_cavi(dataset, hyper, config, state=None):
    """
    Fit the model to ``dataset``.

    ``state`` resumes from a given state (a checkpoint, or a hand-built
    state with frozen factors); iterations continue from ``state.iteration``.
    The focus policy always starts fresh, so only a vanilla fit resumes to
    the same result as an uninterrupted one.

    ``local_update_count`` counts coefficient sweeps only.
    """
    if state is None:
        state = init_state(dataset, hyper, config.seed)
    else:
        state.hyper = hyper
    q = dataset.q
    policy = make_policy(config, hyper, q)
    freeze = tuple(config.freeze)

    elbo_trace, trace, focus_trace, monitor_trace = [], [], [], []
    local_update_count = 0
    wall_local = wall_global = wall_elbo = 0.0
    last_eval = None
    converged = False
    confirming = False
    confirm_from, backoff = 0, CONFIRM_BACKOFF
    iteration = state.iteration
    start = time.perf_counter()

    while iteration < hyper.max_iters:
        iteration += 1
        state.iteration = iteration
        temperature = annealing_temperature(iteration, hyper)
        warmup = iteration <= hyper.warmup_iters

        if warmup or confirming:
            traits = np.arange(q)
        else:
            traits = policy.select(state)

        tic = time.perf_counter()
        if iteration % XR_REFRESH_EVERY == 0:
            state.recompute_xr(dataset)
            state.dirty[:] = True
        update_local_factors(state, dataset, traits, temperature, iteration, freeze)
        if len(traits) < q:
            others = np.setdiff1d(np.arange(q), traits, assume_unique=True)
            update_trait_factors(
                state, dataset, others, temperature, iteration, freeze
            )
        wall_local += time.perf_counter() - tic
        local_update_count += len(traits)

        tic = time.perf_counter()
        if "global" not in freeze:
            update_global_factors(state, dataset, temperature)
        wall_global += time.perf_counter() - tic

        evaluated = confirming or policy.should_evaluate(warmup)
        elbo = np.nan
        if evaluated:
            tic = time.perf_counter()
            elbo = compute_elbo(state, dataset, temperature)
            wall_elbo += time.perf_counter() - tic
            state.elbo = elbo
            policy.record_elbo(iteration, elbo, warmup)
            elbo_trace.append((iteration, elbo))

        if config.record_trace:
            monitor_trace.append(
                (iteration, compute_elbo(state, dataset, temperature, use_cache=False))
            )

        trace.append(TraceRow(iteration, elbo, len(traits), temperature))
        focus_trace.append(policy.trace_row(iteration, len(traits), evaluated, warmup))
        logger.debug(
            f"Iteration {iteration}: T={temperature:.4f}, |T|={len(traits)}"
            + (f", ELBO={elbo:.6f}" if evaluated else "")
        )

        if config.checkpoint_every and iteration % config.checkpoint_every == 0:
            save_checkpoint(state, config.checkpoint_path)

        if evaluated and temperature == 1.0 and not warmup:
            settled = False
            if last_eval is not None:
                previous_iteration, previous_elbo = last_eval
                change = abs(elbo - previous_elbo) / (iteration - previous_iteration)
                settled = change < hyper.tol
            if settled and len(traits) == q:
                converged = True
                break
            if confirming:
                confirming = False
                confirm_from = iteration + backoff
                backoff *= 2
                logger.debug(f"Iteration {iteration}: confirmation sweep rejected")
            elif settled and iteration >= confirm_from:
                confirming = True
            last_eval = (iteration, elbo)

    wall_total = time.perf_counter() - start
    final_elbo = compute_elbo(state, dataset, 1.0, use_cache=False)

    status = "converged" if converged else "stopped at max_iters"
    logger.info(
        f"{Scheme(config.scheme).label} {status} after {iteration} iterations "
        f"({local_update_count} local updates, {wall_total:.2f}s, "
        f"ELBO {final_elbo:.4f})"
    )

    return FitReport(
        ppi=state.g.copy(),
        beta_mean=state.m,
        elbo_trace=elbo_trace,
        iterations=iteration,
        local_update_count=local_update_count,
        wall_time_total=wall_total,
        wall_time_local=wall_local,
        wall_time_global=wall_global,
        wall_time_elbo=wall_elbo,
        converged=converged,
        trace=trace,
        focus_trace=focus_trace,
        monitor_trace=monitor_trace,
        final_elbo=final_elbo,
        snp_ids=dataset.snp_ids,
        trait_ids=dataset.trait_ids,
        scheme=str(Scheme(config.scheme).value),
        seed=config.seed,
        state=state,
    )
