"""
Evidence lower bound.

The bound is the sum of expected log densities plus ``temperature`` times
the entropy of every factor, constants included so values can be compared
with exact log evidences. Per-trait sufficient statistics are cached on the
state and refreshed only for traits touched since the last evaluation.
"""

import numpy as np
from scipy.special import entr

from apps.variational.state import (
    gamma_entropy,
    gamma_log_mean,
    gamma_log_prior,
    gamma_mean,
)

from .probit import latent_entropy, latent_moments
from .updates import expected_rss

LOG_2PI = np.log(2.0 * np.pi)
LOG_2PI_E = np.log(2.0 * np.pi * np.e)

ENTROPY_TERMS = (
    "coefficient_entropy",
    "latent_entropy",
    "noise_entropy",
    "offset_entropy",
    "propensity_entropy",
    "shrinkage_entropy",
    "slab_scale_entropy",
)

# Terms that make up the bound of the trait likelihood given fixed noise,
# slab scale and inclusion prior.
CONDITIONAL_TERMS = (
    "likelihood",
    "slab",
    "latent",
    "latent_entropy",
    "coefficient_entropy",
)


def trait_statistics(state, dataset, traits):
    """
    Rows: sum of PPIs, sum of g·(mu² + s2), expected RSS, entropy of
    q(β, γ); one column per trait in ``traits``.
    """
    mu, s2, g = state.mu[:, traits], state.s2[:, traits], state.g[:, traits]
    second = mu**2 + s2
    coefficient_entropy = entr(g) + entr(1.0 - g) + g * 0.5 * (LOG_2PI_E + np.log(s2))
    return np.vstack(
        [
            g.sum(axis=0),
            (g * second).sum(axis=0),
            expected_rss(dataset, state, traits, m=g * mu, second=second),
            coefficient_entropy.sum(axis=0),
        ]
    )


def _cached_statistics(state, dataset):
    stale = np.flatnonzero(state.dirty)
    if stale.size:
        state.trait_stats[:, stale] = trait_statistics(state, dataset, stale)
        state.dirty[stale] = False
    return state.trait_stats


def elbo_terms(state, dataset, use_cache=True, z_center=None):
    """
    The ELBO split into named expected-log-density and entropy terms.

    ``z_center`` fixes the centre of the latent truncated Gaussians instead
    of the current E[θ_s] + E[ζ_t]; it lets the bound be evaluated as a
    function of the propensity or offset factors with q(z | γ) held fixed.
    """
    hyper = state.hyper
    glob = state.glob
    n = dataset.n
    if use_cache:
        sum_g, sum_slab, erss, coefficient_entropy = _cached_statistics(state, dataset)
    else:
        sum_g, sum_slab, erss, coefficient_entropy = trait_statistics(
            state, dataset, np.arange(state.q)
        )

    e_tau, elog_tau = state.e_tau, state.elog_tau
    e_sig, elog_sig = glob.e_sig, glob.elog_sig
    terms = {}

    terms["likelihood"] = float(
        np.sum(0.5 * n * (elog_tau - LOG_2PI) - 0.5 * e_tau * erss)
    )
    terms["slab"] = float(
        np.sum(
            0.5 * sum_g * (elog_sig + elog_tau - LOG_2PI)
            - 0.5 * e_sig * e_tau * sum_slab
        )
    )
    terms["coefficient_entropy"] = float(np.sum(coefficient_entropy))

    # latent Gaussians of the inclusion indicators
    center = glob.theta_mean[:, None] + state.zeta_mean[None, :]
    w = center if z_center is None else np.broadcast_to(z_center, center.shape)
    shift, second = latent_moments(w, state.g)
    offset = w - center
    expected_square = (
        second
        + 2.0 * shift * offset
        + offset**2
        + glob.theta_var[:, None]
        + state.zeta_var[None, :]
    )
    terms["latent"] = float(np.sum(-0.5 * LOG_2PI - 0.5 * expected_square))
    terms["latent_entropy"] = float(np.sum(latent_entropy(w, state.g)))

    # noise precisions
    terms["noise"] = float(
        np.sum(gamma_log_prior(hyper.tau_shape0, hyper.tau_rate0, e_tau, elog_tau))
    )
    terms["noise_entropy"] = float(
        np.sum(gamma_entropy(state.tau_shape, state.tau_rate))
    )

    # offsets
    t0_sq = state.t0**2
    terms["offset"] = float(
        np.sum(
            -0.5 * (LOG_2PI + np.log(t0_sq))
            - ((state.zeta_mean - state.n0) ** 2 + state.zeta_var) / (2.0 * t0_sq)
        )
    )
    terms["offset_entropy"] = float(np.sum(0.5 * (LOG_2PI_E + np.log(state.zeta_var))))

    # propensities and shrinkage
    e_lam, elog_lam = glob.e_lam, gamma_log_mean(glob.lam_shape, glob.lam_rate)
    e_aux = gamma_mean(glob.lam_aux_shape, glob.lam_aux_rate)
    elog_aux = gamma_log_mean(glob.lam_aux_shape, glob.lam_aux_rate)
    e_sig0, elog_sig0 = glob.e_sig0, gamma_log_mean(glob.sig0_shape, glob.sig0_rate)
    e_sig0_aux = gamma_mean(glob.sig0_aux_shape, glob.sig0_aux_rate)
    elog_sig0_aux = gamma_log_mean(glob.sig0_aux_shape, glob.sig0_aux_rate)

    terms["propensity"] = float(
        np.sum(
            -0.5 * LOG_2PI
            + 0.5 * (elog_lam + elog_sig0)
            - 0.5 * e_lam * e_sig0 * glob.theta_second_moment
        )
    )
    terms["propensity_entropy"] = float(
        np.sum(0.5 * (LOG_2PI_E + np.log(glob.theta_var)))
    )
    terms["shrinkage"] = float(
        np.sum(gamma_log_prior(0.5, e_aux, e_lam, elog_lam, log_rate0=elog_aux))
        + np.sum(gamma_log_prior(0.5, 1.0, e_aux, elog_aux))
        + gamma_log_prior(0.5, e_sig0_aux, e_sig0, elog_sig0, log_rate0=elog_sig0_aux)
        + gamma_log_prior(0.5, float(state.q), e_sig0_aux, elog_sig0_aux)
    )
    terms["shrinkage_entropy"] = float(
        np.sum(gamma_entropy(glob.lam_shape, glob.lam_rate))
        + np.sum(gamma_entropy(glob.lam_aux_shape, glob.lam_aux_rate))
        + gamma_entropy(glob.sig0_shape, glob.sig0_rate)
        + gamma_entropy(glob.sig0_aux_shape, glob.sig0_aux_rate)
    )

    # slab scale
    terms["slab_scale"] = float(
        gamma_log_prior(hyper.sig_shape0, hyper.sig_rate0, e_sig, elog_sig)
    )
    terms["slab_scale_entropy"] = float(gamma_entropy(glob.sig_shape, glob.sig_rate))
    return terms


def combine_terms(terms, temperature=1.0, names=None):
    names = terms.keys() if names is None else names
    return sum(
        temperature * terms[name] if name in ENTROPY_TERMS else terms[name]
        for name in names
    )


def compute_elbo(state, dataset, temperature=1.0, use_cache=True, z_center=None):
    """E_q[log p(y, ν)] + temperature · H[q]."""
    terms = elbo_terms(state, dataset, use_cache=use_cache, z_center=z_center)
    return float(combine_terms(terms, temperature))


def conditional_elbo(state, dataset):
    """Bound on log p(y | τ, σ², inclusion prior) for concentrated global factors."""
    terms = elbo_terms(state, dataset, use_cache=False)
    return float(combine_terms(terms, 1.0, CONDITIONAL_TERMS))
