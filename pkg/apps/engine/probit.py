"""
Moments of the latent Gaussian behind each inclusion indicator.

Given γ the latent z is N(W, 1) truncated to z > 0 (γ = 1) or z <= 0
(γ = 0), W being the current E[θ_s] + E[ζ_t]. Nothing is stored: every
quantity below is a function of W and the PPI g.
"""

import numpy as np
from scipy.special import log_ndtr
from scipy.stats import norm

HALF_LOG_2PI_E = 0.5 * np.log(2.0 * np.pi * np.e)


def mills_ratio(w):
    """φ(w)/Φ(w), stable in the lower tail."""
    return np.exp(norm.logpdf(w) - log_ndtr(w))


def prior_log_odds(w):
    """log Φ(w) − log Φ(−w)."""
    return log_ndtr(w) - log_ndtr(-w)


def latent_mean(w, g):
    """E[z] mixed over γ."""
    return w + g * mills_ratio(w) - (1.0 - g) * mills_ratio(-w)


def latent_moments(w, g):
    """Return (E[z] − w, E[(z − w)²]) mixed over γ."""
    m_pos = mills_ratio(w)
    m_neg = mills_ratio(-w)
    shift = g * m_pos - (1.0 - g) * m_neg
    second = g * (1.0 - w * m_pos) + (1.0 - g) * (1.0 + w * m_neg)
    return shift, second


def latent_entropy(w, g):
    """Entropy of q(z | γ) averaged over q(γ)."""
    positive = HALF_LOG_2PI_E + log_ndtr(w) - 0.5 * w * mills_ratio(w)
    negative = HALF_LOG_2PI_E + log_ndtr(-w) + 0.5 * w * mills_ratio(-w)
    return g * positive + (1.0 - g) * negative
