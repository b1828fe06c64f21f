"""
Exact posterior by enumeration for small single-trait problems.

With the noise precision τ, slab variance σ²/τ and the inclusion prior held
fixed, every inclusion pattern γ has a closed-form Gaussian evidence, so
for p ≤ MAX_ORACLE_P the posterior is obtained by summing over all 2^p
patterns.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from apps.core.exceptions import DimensionMismatchError, OracleSizeError

logger = logging.getLogger(__name__)

MAX_ORACLE_P = 12
LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class OracleResult:
    ppi: np.ndarray
    log_evidence: float
    posterior_mean: np.ndarray
    slab_mean: np.ndarray
    slab_var: np.ndarray


def _pattern_evidence(gram, xty, subset, tau, sigma2):
    """Log evidence offset from the null model, slab mean and covariance."""
    k = len(subset)
    if k == 0:
        return 0.0, np.empty(0), np.empty((0, 0))
    A = gram[np.ix_(subset, subset)] + np.eye(k) / sigma2
    factor = linalg.cho_factor(A, lower=True)
    b = xty[subset]
    mean = linalg.cho_solve(factor, b)
    log_det_A = 2.0 * np.sum(np.log(np.diag(factor[0])))
    log_offset = -0.5 * (k * np.log(sigma2) + log_det_A) + 0.5 * tau * (b @ mean)
    covariance = linalg.cho_solve(factor, np.eye(k)) / tau
    return log_offset, mean, covariance


def exact_posterior_oracle(X, y, tau, sigma2, prior_inclusion):
    """
    Enumerate all inclusion patterns of ``X`` for response ``y``.

    ``prior_inclusion`` is a scalar or a p-vector of prior probabilities.
    Slab moments are those of β_s given γ_s = 1 and are ``nan`` where the
    PPI is zero.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if p > MAX_ORACLE_P:
        raise OracleSizeError(
            f"Enumeration over 2^{p} patterns is too large (limit p={MAX_ORACLE_P})",
            params={"p": p},
        )
    if y.shape != (n,):
        raise DimensionMismatchError(f"Response of shape {y.shape} for {n} samples")
    prior = np.broadcast_to(np.asarray(prior_inclusion, dtype=float), (p,))

    gram, xty = X.T @ X, X.T @ y
    log_null = 0.5 * n * (np.log(tau) - LOG_2PI) - 0.5 * tau * (y @ y)
    with np.errstate(divide="ignore"):
        log_in, log_out = np.log(prior), np.log1p(-prior)

    patterns = list(itertools.product((False, True), repeat=p))
    log_weights = np.empty(len(patterns))
    first = np.zeros((len(patterns), p))
    second = np.zeros((len(patterns), p))
    for i, pattern in enumerate(patterns):
        gamma = np.array(pattern, dtype=bool)
        log_prior = log_in[gamma].sum() + log_out[~gamma].sum()
        if np.isneginf(log_prior):
            log_weights[i] = -np.inf
            continue
        subset = np.flatnonzero(gamma)
        log_offset, mean, covariance = _pattern_evidence(
            gram, xty, subset, tau, sigma2
        )
        log_weights[i] = log_prior + log_offset
        first[i, subset] = mean
        second[i, subset] = mean**2 + np.diag(covariance)

    log_total = logsumexp(log_weights)
    weights = np.exp(log_weights - log_total)
    included = np.array(patterns, dtype=float)
    ppi = weights @ included
    posterior_mean = weights @ first
    with np.errstate(invalid="ignore", divide="ignore"):
        slab_mean = np.where(ppi > 0, posterior_mean / ppi, np.nan)
        slab_var = np.where(ppi > 0, (weights @ second) / ppi - slab_mean**2, np.nan)

    log_evidence = float(log_null + log_total)
    logger.debug(f"Oracle over {len(patterns)} patterns: {log_evidence:.6f}")
    return OracleResult(
        ppi=ppi,
        log_evidence=log_evidence,
        posterior_mean=posterior_mean,
        slab_mean=slab_mean,
        slab_var=slab_var,
    )


def dataset_oracle(dataset, trait, tau, sigma2, prior_inclusion):
    """Oracle for one trait of a standardized Dataset."""
    return exact_posterior_oracle(
        dataset.X, dataset.Y[:, trait], tau, sigma2, prior_inclusion
    )
