"""
Closed-form coordinate updates.

Every replacement below maximises the ELBO over one factor with the others
held fixed; at temperature T the optimal factor is raised to the power 1/T
(Gaussian precisions and Gamma ``shape - 1`` and rate divided by T, slab
variances multiplied by T, inclusion log-odds divided by T).
"""

import logging

import numpy as np
from scipy.special import expit

from apps.core.exceptions import NumericalFailure
from apps.variational.state import (
    gamma_mean,
    noise_factor,
    slab_scale_factor,
    temper_gamma,
)

from .probit import latent_mean, prior_log_odds

logger = logging.getLogger(__name__)


def expected_rss(dataset, state, traits, m=None, second=None):
    """E‖y_t − X γβ_t‖² for ``traits`` from the cached residual projections."""
    mu, s2, g = state.mu[:, traits], state.s2[:, traits], state.g[:, traits]
    m = g * mu if m is None else m
    second = mu**2 + s2 if second is None else second
    variance = g * second - m**2
    return (
        dataset.yty[traits]
        - np.einsum("ij,ij->j", m, dataset.xty[:, traits])
        - np.einsum("ij,ij->j", m, state.xr[:, traits])
        + dataset.gram_diag @ variance
    )


# ============================================================================
# LOCAL FACTORS
# ============================================================================


def update_local_factors(
    state, dataset, traits, temperature=1.0, iteration=0, freeze=()
):
    """
    Refresh the local factors of ``traits``: an ascending sweep over the
    predictors replacing each q(β_st, γ_st), then q(τ_t), then q(ζ_t).

    The sweep runs on all given traits at once; each trait only reads its own
    columns and the global snapshot, so results do not depend on how traits
    are grouped.
    """
    traits = np.asarray(traits, dtype=np.intp)
    if traits.size == 0:
        return state
    glob = state.glob
    gram, diag = dataset.gram, dataset.gram_diag

    mu = state.mu[:, traits]
    s2 = state.s2[:, traits]
    g = state.g[:, traits]
    xr = state.xr[:, traits]
    zeta = state.zeta_mean[traits]
    e_tau = state.e_tau[traits]
    e_sig = glob.e_sig
    half_log_scale = 0.5 * (state.elog_tau[traits] + glob.elog_sig)

    for s in range(dataset.p):
        m_old = g[s] * mu[s]
        precision = e_tau * (diag[s] + e_sig)
        var_opt = 1.0 / precision
        mu_new = e_tau * (xr[s] + diag[s] * m_old) * var_opt
        log_odds = (
            prior_log_odds(glob.theta_mean[s] + zeta)
            + 0.5 * np.log(var_opt)
            + half_log_scale
            + 0.5 * mu_new**2 / var_opt
        )
        g_new = expit(log_odds / temperature)

        finite = np.isfinite(mu_new) & np.isfinite(g_new)
        if not finite.all():
            raise NumericalFailure(int(traits[np.argmin(finite)]), s, iteration)

        xr -= gram[:, s, None] * (g_new * mu_new - m_old)
        mu[s] = mu_new
        s2[s] = temperature * var_opt
        g[s] = g_new

    state.mu[:, traits] = mu
    state.s2[:, traits] = s2
    state.g[:, traits] = g
    state.xr[:, traits] = xr
    return update_trait_factors(state, dataset, traits, temperature, iteration, freeze)


def update_trait_factors(
    state, dataset, traits, temperature=1.0, iteration=0, freeze=()
):
    """
    Refresh q(τ_t) and then q(ζ_t) of ``traits`` given their current
    coefficient factors.

    Both are O(p) per trait from the cached residual projections, against
    O(p²) for the coefficient sweep. The fit loop runs this on the traits
    left out of the focus set so their offsets keep pace with the
    propensities.
    """
    traits = np.asarray(traits, dtype=np.intp)
    if traits.size == 0:
        return state
    glob = state.glob
    mu = state.mu[:, traits]
    s2 = state.s2[:, traits]
    g = state.g[:, traits]
    state.dirty[traits] = True

    if "noise" not in freeze:
        second = mu**2 + s2
        shape, rate = noise_factor(
            state.hyper,
            dataset.n,
            g.sum(axis=0),
            expected_rss(dataset, state, traits, m=g * mu, second=second),
            (g * second).sum(axis=0),
            glob.e_sig,
        )
        shape, rate = temper_gamma(shape, rate, temperature)
        if not (np.all(np.isfinite(rate)) and np.all(rate > 0)):
            bad = int(traits[np.argmin(np.isfinite(rate) & (rate > 0))])
            raise NumericalFailure(bad, dataset.p - 1, iteration)
        state.tau_shape[traits] = shape
        state.tau_rate[traits] = rate

    if "offset" not in freeze:
        theta = glob.theta_mean[:, None]
        ez = latent_mean(theta + state.zeta_mean[traits], g)
        prior_precision = 1.0 / state.t0**2
        precision = dataset.p + prior_precision
        state.zeta_mean[traits] = (
            (ez - theta).sum(axis=0) + state.n0 * prior_precision
        ) / precision
        state.zeta_var[traits] = temperature / precision

    return state


def update_local_factor(state, dataset, t, temperature=1.0, iteration=0, freeze=()):
    """Refresh the local factors of trait ``t``; returns its LocalFactor view."""
    update_local_factors(state, dataset, [t], temperature, iteration, freeze)
    return state.local(t)


# ============================================================================
# GLOBAL FACTORS
# ============================================================================


def update_global_factors(state, dataset, temperature=1.0):
    """
    Refresh, in order, the hotspot propensities q(θ_s), the local shrinkage
    q(λ_s⁻²) and its auxiliary, the global shrinkage q(σ₀⁻²) and its
    auxiliary, and the slab scale q(σ⁻²).
    """
    glob = state.glob
    p, q = state.p, state.q

    # propensities
    zeta = state.zeta_mean[None, :]
    ez = latent_mean(glob.theta_mean[:, None] + zeta, state.g)
    precision = q + glob.e_lam * glob.e_sig0
    glob.theta_mean = (ez - zeta).sum(axis=1) / precision
    glob.theta_var = temperature / precision

    # local shrinkage and its auxiliary
    e_lam_aux = gamma_mean(glob.lam_aux_shape, glob.lam_aux_rate)
    shape, rate = temper_gamma(
        np.ones(p),
        e_lam_aux + 0.5 * glob.e_sig0 * glob.theta_second_moment,
        temperature,
    )
    glob.lam_shape, glob.lam_rate = shape, rate
    glob.lam_aux_shape, glob.lam_aux_rate = temper_gamma(
        np.ones(p), glob.e_lam + 1.0, temperature
    )

    # global shrinkage and its auxiliary
    e_sig0_aux = gamma_mean(glob.sig0_aux_shape, glob.sig0_aux_rate)
    shape, rate = temper_gamma(
        0.5 * p + 0.5,
        e_sig0_aux + 0.5 * float(glob.e_lam @ glob.theta_second_moment),
        temperature,
    )
    glob.sig0_shape, glob.sig0_rate = float(shape), float(rate)
    shape, rate = temper_gamma(1.0, glob.e_sig0 + q, temperature)
    glob.sig0_aux_shape, glob.sig0_aux_rate = float(shape), float(rate)

    # slab scale
    weighted = float(
        np.einsum("ij,ij->j", state.g, state.mu**2 + state.s2) @ state.e_tau
    )
    shape, rate = slab_scale_factor(state.hyper, state.g.sum(), weighted)
    shape, rate = temper_gamma(shape, rate, temperature)
    glob.sig_shape, glob.sig_rate = float(shape), float(rate)

    if not (np.all(np.isfinite(glob.theta_mean)) and np.isfinite(glob.sig_rate)):
        snp = int(np.argmin(np.isfinite(glob.theta_mean)))
        raise NumericalFailure(-1, snp, state.iteration)
    return state
