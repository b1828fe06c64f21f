"""
Variational factors of the multi-trait model and their container.

Per-trait (local) factors are stored column-wise in p by q arrays so the
engine can update many traits in one vectorised sweep; ``LocalFactor`` is a
per-trait view onto those columns. Shrinkage scales use the Gamma
scale-mixture form of the half-Cauchy: the precision ``κ_s = λ_s⁻²`` given
its auxiliary ``ρ_s`` is Gamma(1/2, ρ_s) with ``ρ_s`` ~ Gamma(1/2, 1), and
likewise ``ψ = σ₀⁻²`` given ``ω`` is Gamma(1/2, ω) with ``ω`` ~ Gamma(1/2, q).
"""

import copy
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy.special import digamma, gammaln

from .hyperparameters import Hyperparameters
from .zeta_prior import solve_zeta_prior

logger = logging.getLogger(__name__)

# ============================================================================
# GAMMA HELPERS
# ============================================================================


def gamma_mean(shape, rate):
    return shape / rate


def gamma_log_mean(shape, rate):
    """E[log x] under Gamma(shape, rate)."""
    return digamma(shape) - np.log(rate)


def gamma_entropy(shape, rate):
    return shape - np.log(rate) + gammaln(shape) + (1.0 - shape) * digamma(shape)


def gamma_log_prior(shape0, rate0, mean, log_mean, log_rate0=None):
    """
    E[log Gamma(x; shape0, rate0)] for a factor with moments ``mean`` and
    ``log_mean``. ``log_rate0`` replaces log(rate0) when the rate is itself
    random.
    """
    log_rate0 = np.log(rate0) if log_rate0 is None else log_rate0
    return (
        shape0 * log_rate0
        - gammaln(shape0)
        + (shape0 - 1.0) * log_mean
        - rate0 * mean
    )


# ============================================================================
# CLOSED-FORM NOISE FACTORS
# ============================================================================


def noise_factor(hyper, n, sum_g, erss, sum_slab, e_sig):
    """Optimal Gamma (shape, rate) of q(τ_t) before tempering."""
    shape = hyper.tau_shape0 + 0.5 * n + 0.5 * sum_g
    rate = hyper.tau_rate0 + 0.5 * erss + 0.5 * e_sig * sum_slab
    return shape, rate


def slab_scale_factor(hyper, total_g, weighted_slab):
    """Optimal Gamma (shape, rate) of q(σ⁻²) before tempering."""
    shape = hyper.sig_shape0 + 0.5 * total_g
    rate = hyper.sig_rate0 + 0.5 * weighted_slab
    return shape, rate


def temper_gamma(shape, rate, temperature):
    """Raise a Gamma density to the power 1/T."""
    if temperature == 1.0:
        return shape, rate
    return (shape - 1.0) / temperature + 1.0, rate / temperature


# ============================================================================
# FACTORS
# ============================================================================


@dataclass
class LocalFactor:
    """Factors of one trait: slab moments, PPIs, noise precision and offset."""

    mu: np.ndarray
    s2: np.ndarray
    g: np.ndarray
    tau_shape: float
    tau_rate: float
    zeta_mean: float
    zeta_var: float
    xr_cache: np.ndarray


@dataclass
class GlobalFactor:
    theta_mean: np.ndarray
    theta_var: np.ndarray
    sig_shape: float
    sig_rate: float
    lam_shape: np.ndarray
    lam_rate: np.ndarray
    lam_aux_shape: np.ndarray
    lam_aux_rate: np.ndarray
    sig0_shape: float
    sig0_rate: float
    sig0_aux_shape: float
    sig0_aux_rate: float

    @property
    def e_sig(self):
        """E[σ⁻²]."""
        return gamma_mean(self.sig_shape, self.sig_rate)

    @property
    def elog_sig(self):
        return gamma_log_mean(self.sig_shape, self.sig_rate)

    @property
    def e_lam(self):
        """E[λ_s⁻²]."""
        return gamma_mean(self.lam_shape, self.lam_rate)

    @property
    def e_sig0(self):
        """E[σ₀⁻²]."""
        return gamma_mean(self.sig0_shape, self.sig0_rate)

    @property
    def theta_second_moment(self):
        return self.theta_mean**2 + self.theta_var


@dataclass
class VariationalState:
    """
    All variational factors plus bookkeeping for cached ELBO terms.

    ``trait_stats`` rows hold per-trait sums reused by the ELBO (sum of
    PPIs, sum of slab second moments, expected residual sum of squares and
    coefficient entropy); ``dirty`` marks traits whose row is stale.
    """

    mu: np.ndarray
    s2: np.ndarray
    g: np.ndarray
    xr: np.ndarray
    tau_shape: np.ndarray
    tau_rate: np.ndarray
    zeta_mean: np.ndarray
    zeta_var: np.ndarray
    glob: GlobalFactor
    hyper: Hyperparameters
    n0: float
    t0: float
    elbo: float = -np.inf
    iteration: int = 0
    trait_stats: np.ndarray = None
    dirty: np.ndarray = None

    def __post_init__(self):
        if self.trait_stats is None:
            self.trait_stats = np.zeros((4, self.q))
        if self.dirty is None:
            self.dirty = np.ones(self.q, dtype=bool)

    @property
    def p(self):
        return self.mu.shape[0]

    @property
    def q(self):
        return self.mu.shape[1]

    @property
    def e_tau(self):
        return gamma_mean(self.tau_shape, self.tau_rate)

    @property
    def elog_tau(self):
        return gamma_log_mean(self.tau_shape, self.tau_rate)

    @property
    def m(self):
        """E[γ β], p by q."""
        return self.g * self.mu

    def local(self, t):
        return LocalFactor(
            mu=self.mu[:, t],
            s2=self.s2[:, t],
            g=self.g[:, t],
            tau_shape=float(self.tau_shape[t]),
            tau_rate=float(self.tau_rate[t]),
            zeta_mean=float(self.zeta_mean[t]),
            zeta_var=float(self.zeta_var[t]),
            xr_cache=self.xr[:, t],
        )

    @property
    def locals(self):
        return [self.local(t) for t in range(self.q)]

    def copy(self):
        return copy.deepcopy(self)

    def recompute_xr(self, dataset, traits=None):
        """Rebuild Xᵀ(y_t − X E[γβ]) from scratch for ``traits`` (all by default)."""
        if traits is None:
            self.xr = dataset.xty - dataset.gram @ self.m
        else:
            self.xr[:, traits] = (
                dataset.xty[:, traits] - dataset.gram @ self.m[:, traits]
            )
        return self.xr


def init_state(dataset, hyper, seed=0):
    """
    Starting point of a fit.

    Slab means are 0 with unit variances and every PPI is e_active/p; the
    offsets sit at their prior, propensities at N(0, 1) and the shrinkage
    factors at their priors. The noise precisions q(τ_t) and the slab scale
    q(σ⁻²) start at their closed-form optimum given these coefficient
    factors: started at a vague prior their expected logs are near -100,
    which wipes out every inclusion probability in the first sweep. No
    randomness is involved; ``seed`` is recorded for reproducibility only.
    """
    n, p, q = dataset.n, dataset.p, dataset.q
    n0, t0 = solve_zeta_prior(hyper, p)

    mu = np.zeros((p, q))
    s2 = np.ones((p, q))
    g = np.full((p, q), hyper.e_active / p)

    sum_g = g.sum(axis=0)
    sum_slab = (g * (mu**2 + s2)).sum(axis=0)
    erss = dataset.yty + dataset.gram_diag @ (g * (mu**2 + s2) - (g * mu) ** 2)
    prior_sig = hyper.sig_shape0 / hyper.sig_rate0
    tau_shape, tau_rate = noise_factor(hyper, n, sum_g, erss, sum_slab, prior_sig)
    sig_shape, sig_rate = slab_scale_factor(
        hyper, sum_g.sum(), (gamma_mean(tau_shape, tau_rate) * sum_slab).sum()
    )

    glob = GlobalFactor(
        theta_mean=np.zeros(p),
        theta_var=np.ones(p),
        sig_shape=float(sig_shape),
        sig_rate=float(sig_rate),
        lam_shape=np.full(p, 0.5),
        lam_rate=np.full(p, 0.5),
        lam_aux_shape=np.full(p, 0.5),
        lam_aux_rate=np.ones(p),
        sig0_shape=0.5,
        sig0_rate=1.0 / (2.0 * q),
        sig0_aux_shape=0.5,
        sig0_aux_rate=float(q),
    )
    state = VariationalState(
        mu=mu,
        s2=s2,
        g=g,
        xr=dataset.xty.copy(),
        tau_shape=np.asarray(tau_shape, dtype=float),
        tau_rate=np.asarray(tau_rate, dtype=float),
        zeta_mean=np.full(q, n0),
        zeta_var=np.full(q, t0**2),
        glob=glob,
        hyper=hyper,
        n0=float(n0),
        t0=float(t0),
    )
    logger.debug(f"Initialised state for n={n}, p={p}, q={q} (seed {seed})")
    return state


# ============================================================================
# CHECKPOINTS
# ============================================================================

_LOCAL_ARRAYS = (
    "mu",
    "s2",
    "g",
    "xr",
    "tau_shape",
    "tau_rate",
    "zeta_mean",
    "zeta_var",
)


def save_checkpoint(state, path):
    """Write the state as one ``.npz`` bundle; reloading is bit-exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {name: getattr(state, name) for name in _LOCAL_ARRAYS}
    for f in fields(GlobalFactor):
        arrays[f"global_{f.name}"] = np.asarray(getattr(state.glob, f.name))
    for name, value in asdict(state.hyper).items():
        arrays[f"hyper_{name}"] = np.asarray(np.nan if value is None else value)
    arrays["scalars"] = np.array([state.n0, state.t0, state.elbo, state.iteration])
    with open(path, "wb") as handle:
        np.savez(handle, **arrays)
    logger.debug(f"Checkpoint written to {path} at iteration {state.iteration}")
    return path


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as bundle:
        glob_values = {}
        for f in fields(GlobalFactor):
            value = bundle[f"global_{f.name}"]
            glob_values[f.name] = float(value) if value.ndim == 0 else value.copy()
        hyper_values = {}
        for f in fields(Hyperparameters):
            value = bundle[f"hyper_{f.name}"].item()
            if isinstance(value, float) and np.isnan(value):
                value = None
            hyper_values[f.name] = value
        n0, t0, elbo, iteration = bundle["scalars"]
        return VariationalState(
            **{name: bundle[name].copy() for name in _LOCAL_ARRAYS},
            glob=GlobalFactor(**glob_values),
            hyper=Hyperparameters(**hyper_values),
            n0=float(n0),
            t0=float(t0),
            elbo=float(elbo),
            iteration=int(iteration),
        )
