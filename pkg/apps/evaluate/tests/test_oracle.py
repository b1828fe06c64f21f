import itertools

import numpy as np
from django.test import SimpleTestCase
from scipy import integrate, stats
from scipy.special import logsumexp, ndtr

from apps.core.exceptions import OracleSizeError
from apps.engine.fit import FitConfig, run_cavi
from apps.engine.tests.helpers import (
    concentrated_state,
    exact_hyper,
    signal_dataset,
    single_predictor_posterior,
)
from apps.evaluate.oracle import dataset_oracle, exact_posterior_oracle


class OracleTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(0)
        self.X = rng.normal(size=(30, 3))
        self.y = self.X @ np.array([0.8, 0.0, -0.4]) + rng.normal(size=30)

    def test_spike_only_prior(self):
        result = exact_posterior_oracle(self.X, self.y, 1.3, 0.7, 0.0)
        np.testing.assert_array_equal(result.ppi, np.zeros(3))
        n = self.y.size
        null = stats.multivariate_normal.logpdf(
            self.y, mean=np.zeros(n), cov=np.eye(n) / 1.3
        )
        self.assertAlmostEqual(result.log_evidence, null, places=8)
        self.assertTrue(np.isnan(result.slab_mean).all())

    def test_matches_dense_gaussian_enumeration(self):
        tau, sigma2, prior = 1.3, 0.7, np.array([0.2, 0.5, 0.9])
        n = self.y.size
        log_weights, included = [], []
        for pattern in itertools.product((0, 1), repeat=3):
            gamma = np.array(pattern, dtype=bool)
            Xs = self.X[:, gamma]
            cov = (np.eye(n) + sigma2 * Xs @ Xs.T) / tau
            log_prior = np.sum(np.where(gamma, np.log(prior), np.log1p(-prior)))
            log_weights.append(
                log_prior + stats.multivariate_normal.logpdf(self.y, np.zeros(n), cov)
            )
            included.append(gamma)
        log_weights = np.array(log_weights)
        weights = np.exp(log_weights - logsumexp(log_weights))

        result = exact_posterior_oracle(self.X, self.y, tau, sigma2, prior)
        self.assertAlmostEqual(result.log_evidence, logsumexp(log_weights), places=8)
        np.testing.assert_allclose(result.ppi, weights @ np.array(included), atol=1e-10)

    def test_single_predictor_closed_form(self):
        data = signal_dataset(n=80, p=1, q=2, seed=3)
        tau, sig = 0.9, 1.7
        result = dataset_oracle(data, 1, tau, 1 / sig, 0.3)
        ppi, mean, variance, evidence = single_predictor_posterior(data, 1, tau, sig, 0.3)
        self.assertAlmostEqual(result.ppi[0], ppi, places=10)
        self.assertAlmostEqual(result.slab_mean[0], mean, places=10)
        self.assertAlmostEqual(result.slab_var[0], variance, places=10)
        self.assertAlmostEqual(result.log_evidence, evidence, places=8)

    def test_single_predictor_quadrature(self):
        x, y = self.X[:, 0], self.y
        tau, sigma2, prior = 1.1, 0.5, 0.4
        result = exact_posterior_oracle(x[:, None], y, tau, sigma2, prior)

        def log_likelihood(beta):
            r = y - x * beta
            return 0.5 * y.size * (np.log(tau) - np.log(2 * np.pi)) - 0.5 * tau * r @ r

        slab_sd = np.sqrt(sigma2 / tau)
        peak = (x @ y) / (x @ x + 1 / sigma2)
        anchor = log_likelihood(peak)
        integral, _ = integrate.quad(
            lambda b: np.exp(log_likelihood(b) - anchor)
            * stats.norm.pdf(b, scale=slab_sd),
            peak - 3.0,
            peak + 3.0,
            epsabs=0,
            epsrel=1e-13,
            limit=200,
        )
        slab = anchor + np.log(integral)
        evidence = np.logaddexp(np.log1p(-prior) + log_likelihood(0.0), np.log(prior) + slab)
        self.assertAlmostEqual(result.log_evidence, evidence, delta=1e-8)

    def test_size_limit(self):
        with self.assertRaises(OracleSizeError):
            exact_posterior_oracle(np.ones((5, 13)), np.zeros(5), 1.0, 1.0, 0.1)

    def test_engine_agrees_with_frozen_factors(self):
        data = signal_dataset(n=100, p=1, q=3, seed=22)
        hyper = exact_hyper()
        state = concentrated_state(data, hyper, tau=1.2, sig=0.8, theta=0.1, zeta=-0.4)
        report = run_cavi(
            data, hyper, FitConfig(freeze=("global", "noise", "offset")), state=state
        )
        prior = float(ndtr(-0.3))
        for t in range(3):
            result = dataset_oracle(data, t, 1.2, 1 / 0.8, prior)
            self.assertAlmostEqual(report.ppi[0, t], result.ppi[0], delta=1e-6)
            self.assertAlmostEqual(
                report.beta_mean[0, t], result.posterior_mean[0], delta=1e-6
            )
