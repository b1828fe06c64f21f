import numpy as np
from django.test import SimpleTestCase
from scipy.special import ndtr

from apps.engine.elbo import (
    ENTROPY_TERMS,
    compute_elbo,
    conditional_elbo,
    elbo_terms,
)
from apps.engine.updates import update_global_factors, update_local_factors
from apps.variational.state import init_state

from .helpers import (
    concentrated_state,
    exact_hyper,
    signal_dataset,
    single_predictor_posterior,
    small_hyper,
)


class ElboTests(SimpleTestCase):
    def setUp(self):
        self.data = signal_dataset(seed=11)
        self.state = init_state(self.data, small_hyper())

    def assertClose(self, a, b, rel=1e-9):
        self.assertLessEqual(abs(a - b), rel * max(1.0, abs(a)))

    def test_finite_at_init(self):
        terms = elbo_terms(self.state, self.data)
        self.assertTrue(all(np.isfinite(v) for v in terms.values()))

    def test_cache_matches_scratch(self):
        rng = np.random.default_rng(0)
        compute_elbo(self.state, self.data)
        for _ in range(6):
            traits = np.flatnonzero(rng.random(self.data.q) < 0.5)
            update_local_factors(self.state, self.data, traits)
            update_global_factors(self.state, self.data)
            cached = compute_elbo(self.state, self.data)
            scratch = compute_elbo(self.state, self.data, use_cache=False)
            self.assertClose(cached, scratch)
        self.assertFalse(self.state.dirty.any())

    def test_linear_in_temperature(self):
        update_local_factors(self.state, self.data, np.arange(self.data.q))
        terms = elbo_terms(self.state, self.data, use_cache=False)
        entropy = sum(terms[name] for name in ENTROPY_TERMS)
        difference = compute_elbo(self.state, self.data, 2.0) - compute_elbo(
            self.state, self.data, 1.0
        )
        self.assertClose(difference, entropy)

    def test_single_predictor_bound_is_tight(self):
        data = signal_dataset(n=50, p=1, q=2, seed=12)
        state = concentrated_state(data, exact_hyper(), tau=0.9, sig=1.5, theta=0.2)
        update_local_factors(state, data, [0, 1], freeze=("noise", "offset"))
        evidence = sum(
            single_predictor_posterior(data, t, 0.9, 1.5, float(ndtr(-0.3)))[3]
            for t in range(2)
        )
        self.assertAlmostEqual(conditional_elbo(state, data), evidence, delta=1e-6)

    def test_bound_below_evidence(self):
        data = signal_dataset(n=50, p=1, q=2, seed=13)
        state = concentrated_state(data, exact_hyper(), tau=0.9, sig=1.5, theta=0.2)
        update_local_factors(state, data, [0, 1], freeze=("noise", "offset"))
        state.g *= 0.7
        state.recompute_xr(data)
        evidence = sum(
            single_predictor_posterior(data, t, 0.9, 1.5, float(ndtr(-0.3)))[3]
            for t in range(2)
        )
        self.assertLess(conditional_elbo(state, data), evidence)
