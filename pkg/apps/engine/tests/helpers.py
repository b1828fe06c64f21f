import numpy as np
from scipy.special import logsumexp, ndtr

from apps.data.dataset import standardize
from apps.data.tests.test_dataset import make_meta
from apps.variational.hyperparameters import Hyperparameters
from apps.variational.state import init_state

CONCENTRATION = 1e12
TINY_VARIANCE = 1e-14


def signal_dataset(n=120, p=8, q=6, seed=0, effect=0.6, active=None):
    """SNP 1 drives the first ``active`` traits (half by default); the rest is noise."""
    active = q // 2 if active is None else active
    rng = np.random.default_rng(seed)
    X = rng.binomial(2, 0.35, size=(n, p)).astype(float)
    X[0, :], X[1, :] = 0.0, 2.0
    Y = rng.normal(size=(n, q))
    Y[:, :active] += effect * (X[:, [1]] - X[:, [1]].mean())
    return standardize(X, Y, *make_meta(p, q))


def small_hyper(**kwargs):
    values = dict(
        e_active=1.0,
        v_active=2.0,
        warmup_iters=10,
        anneal_grid=5,
        max_iters=300,
        tol=1e-6,
    )
    values.update(kwargs)
    return Hyperparameters(**values)


def exact_hyper(**kwargs):
    values = dict(
        n0=0.0,
        t0=1.0,
        warmup_iters=0,
        anneal_T0=1.0,
        anneal_grid=1,
        max_iters=5,
        tol=1e-12,
    )
    values.update(kwargs)
    return Hyperparameters(**values)


def concentrated_state(dataset, hyper, tau=1.5, sig=2.0, theta=0.3, zeta=-0.5):
    """State whose noise, slab scale, propensity and offset factors are point masses."""
    state = init_state(dataset, hyper)
    q = dataset.q
    state.tau_shape = np.full(q, tau * CONCENTRATION)
    state.tau_rate = np.full(q, CONCENTRATION)
    state.zeta_mean = np.full(q, zeta)
    state.zeta_var = np.full(q, TINY_VARIANCE)
    state.glob.sig_shape = sig * CONCENTRATION
    state.glob.sig_rate = CONCENTRATION
    state.glob.theta_mean = np.full(dataset.p, theta)
    state.glob.theta_var = np.full(dataset.p, TINY_VARIANCE)
    return state


def single_predictor_posterior(dataset, t, tau, sig, prior):
    """
    Exact posterior of (β, γ) and log evidence for one standardized
    predictor with fixed noise precision, slab precision and inclusion prior.
    """
    x, y = dataset.X[:, 0], dataset.Y[:, t]
    n, d, xty, yty = x.size, x @ x, x @ y, y @ y
    precision = tau * (d + sig)
    variance = 1.0 / precision
    mean = tau * xty * variance
    log_null = 0.5 * n * (np.log(tau) - np.log(2 * np.pi)) - 0.5 * tau * yty
    log_slab = (
        log_null
        - 0.5 * np.log1p(d / sig)
        + 0.5 * tau * xty**2 / (sig + d)
    )
    log_weights = np.array([np.log1p(-prior) + log_null, np.log(prior) + log_slab])
    log_evidence = logsumexp(log_weights)
    ppi = float(np.exp(log_weights[1] - log_evidence))
    return ppi, mean, variance, float(log_evidence)


def prior_inclusion(theta, zeta):
    return float(ndtr(theta + zeta))
