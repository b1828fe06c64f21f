import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from scipy.special import ndtr

from apps.core.exceptions import FitConfigError
from apps.data.dataset import standardize
from apps.engine import fit
from apps.engine.fit import FitConfig, run_cavi
from apps.engine.updates import update_trait_factors
from apps.evaluate.metrics import confusion_metrics
from apps.focus.policies import Scheme
from apps.pipeline.loci import summarize_loci
from apps.variational.state import load_checkpoint

from .helpers import (
    concentrated_state,
    exact_hyper,
    signal_dataset,
    single_predictor_posterior,
    small_hyper,
)


class FitConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = FitConfig()
        self.assertEqual((config.rf_fraction, config.afi_decay), (0.5, 0.95))

    def test_invalid_values(self):
        for kwargs in (
            {"scheme": "greedy"},
            {"rf_fraction": 0.0},
            {"rf_fraction": 1.5},
            {"afi_decay": 1.0},
            {"freeze": ("slab",)},
            {"checkpoint_every": 5},
        ):
            with self.subTest(**kwargs), self.assertRaises(FitConfigError):
                FitConfig(**kwargs)


class RunCaviTests(SimpleTestCase):
    def setUp(self):
        self.data = signal_dataset(seed=21)
        self.hyper = small_hyper()

    def test_single_predictor_oracle(self):
        data = signal_dataset(n=100, p=1, q=3, seed=22)
        hyper = exact_hyper()
        state = concentrated_state(data, hyper, tau=1.2, sig=0.8, theta=0.1, zeta=-0.4)
        config = FitConfig(freeze=("global", "noise", "offset"))
        report = run_cavi(data, hyper, config, state=state)
        for t in range(3):
            ppi, mean, _, _ = single_predictor_posterior(
                data, t, 1.2, 0.8, float(ndtr(-0.3))
            )
            self.assertAlmostEqual(report.ppi[0, t], ppi, delta=1e-6)
            self.assertAlmostEqual(report.beta_mean[0, t], ppi * mean, delta=1e-6)
        self.assertTrue(report.converged)

    def test_detects_signal(self):
        report = run_cavi(self.data, self.hyper, FitConfig())
        self.assertTrue(report.converged)
        self.assertTrue(np.all(report.ppi[1, :3] > 0.5))
        self.assertTrue(np.all((report.ppi >= 0) & (report.ppi <= 1)))
        np.testing.assert_array_equal(report.beta_mean, report.ppi * report.state.mu)

    def test_deterministic(self):
        for scheme in Scheme.values:
            with self.subTest(scheme=scheme):
                config = FitConfig(scheme=scheme, seed=5)
                first = run_cavi(self.data, self.hyper, config)
                second = run_cavi(self.data, self.hyper, config)
                self.assertTrue(first.same_result(second))

    def test_full_random_focus_is_vanilla(self):
        vanilla = run_cavi(self.data, self.hyper, FitConfig())
        rf = run_cavi(self.data, self.hyper, FitConfig(scheme=Scheme.RF, rf_fraction=1.0))
        np.testing.assert_array_equal(rf.ppi, vanilla.ppi)
        self.assertEqual(rf.local_update_count, vanilla.local_update_count)

    def test_slow_decay_is_vanilla(self):
        vanilla = run_cavi(self.data, self.hyper, FitConfig())
        afi = run_cavi(
            self.data, self.hyper, FitConfig(scheme=Scheme.AFI, afi_decay=1 - 1e-12)
        )
        np.testing.assert_array_equal(afi.ppi, vanilla.ppi)
        self.assertEqual(afi.iterations, vanilla.iterations)

    def test_elbo_non_decreasing(self):
        for scheme in Scheme.values:
            with self.subTest(scheme=scheme):
                report = run_cavi(
                    self.data,
                    self.hyper,
                    FitConfig(scheme=scheme, seed=3, record_trace=True),
                )
                annealed = [
                    elbo
                    for (iteration, elbo) in report.monitor_trace
                    if iteration >= self.hyper.anneal_grid
                ]
                for before, after in zip(annealed, annealed[1:]):
                    self.assertGreaterEqual(after, before - 1e-7 * abs(before))

    def test_update_counts(self):
        vanilla = run_cavi(self.data, self.hyper, FitConfig())
        self.assertEqual(vanilla.local_update_count, vanilla.iterations * self.data.q)
        afio = run_cavi(self.data, self.hyper, FitConfig(scheme=Scheme.AFIO))
        self.assertEqual(
            afio.local_update_count, sum(row.n_updated for row in afio.trace)
        )
        self.assertLessEqual(afio.local_update_count, afio.iterations * self.data.q)

    def test_intermittent_skips_warmup_evaluations(self):
        report = run_cavi(self.data, self.hyper, FitConfig(scheme=Scheme.AFIO))
        self.assertTrue(
            all(i > self.hyper.warmup_iters for i, _ in report.elbo_trace)
        )

    def test_trait_permutation(self):
        order = np.array([3, 0, 5, 1, 4, 2])
        permuted = standardize(
            self.data.X,
            self.data.Y[:, order],
            self.data.snp_meta,
            tuple(self.data.trait_meta[i] for i in order),
        )
        base = run_cavi(self.data, self.hyper, FitConfig())
        moved = run_cavi(permuted, self.hyper, FitConfig())
        # Global sums over traits run in another order, so equality is up to rounding
        self.assertEqual(moved.iterations, base.iterations)
        np.testing.assert_allclose(moved.ppi, base.ppi[:, order], rtol=0, atol=1e-10)

    def test_stops_at_max_iters(self):
        hyper = small_hyper(max_iters=12, tol=1e-300)
        report = run_cavi(self.data, hyper, FitConfig())
        self.assertFalse(report.converged)
        self.assertEqual(report.iterations, 12)

    def test_residual_cache_after_fit(self):
        report = run_cavi(self.data, self.hyper, FitConfig(scheme=Scheme.AFE))
        state = report.state
        expected = self.data.xty - self.data.gram @ state.m
        np.testing.assert_allclose(state.xr, expected, atol=1e-8)

    def test_resume_from_checkpoint(self):
        full_hyper = small_hyper(max_iters=30, tol=1e-300)
        full = run_cavi(self.data, full_hyper, FitConfig())
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "state.npz"
            config = FitConfig(checkpoint_every=15, checkpoint_path=path)
            run_cavi(self.data, small_hyper(max_iters=15, tol=1e-300), config)
            state = load_checkpoint(path)
        self.assertEqual(state.iteration, 15)
        resumed = run_cavi(self.data, full_hyper, FitConfig(), state=state)
        self.assertEqual(resumed.iterations, 30)
        np.testing.assert_array_equal(resumed.ppi, full.ppi)

    def test_resumed_adaptive_fit_restarts_focus_schedule(self):
        hyper = small_hyper(max_iters=30, tol=1e-300)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "state.npz"
            config = FitConfig(
                scheme=Scheme.AFI, checkpoint_every=15, checkpoint_path=path
            )
            run_cavi(self.data, small_hyper(max_iters=15, tol=1e-300), config)
            state = load_checkpoint(path)
        resumed = run_cavi(self.data, hyper, FitConfig(scheme=Scheme.AFI), state=state)
        self.assertEqual(resumed.iterations, 30)
        self.assertEqual(resumed.focus_trace[0].iteration, 16)
        self.assertEqual(resumed.focus_trace[0].epsilon, 1.0)


def discoveries(report, threshold=0.5):
    return np.flatnonzero(report.ppi.ravel() > threshold)


def loci_key(report, data):
    loci = summarize_loci(
        report.ppi, report.beta_mean, data.snp_meta, trait_ids=data.trait_ids
    )
    return [
        (locus.lead_snp, tuple(a.trait_id for a in locus.associations))
        for locus in loci
    ]


class AdaptiveFocusTests(SimpleTestCase):
    """Adaptive schemes against vanilla on a sparse toy problem."""

    ADAPTIVE = (Scheme.AFE, Scheme.AFI, Scheme.AFIO)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.data = signal_dataset(n=150, q=12, seed=31, effect=0.8, active=3)
        cls.hyper = small_hyper(max_iters=2000)
        cls.vanilla = run_cavi(cls.data, cls.hyper, FitConfig())
        cls.reports = {
            scheme: run_cavi(cls.data, cls.hyper, FitConfig(scheme=scheme, seed=2))
            for scheme in cls.ADAPTIVE
        }

    def test_partial_stop_is_confirmed_by_full_sweep(self):
        rf = run_cavi(self.data, self.hyper, FitConfig(scheme=Scheme.RF, seed=2))
        for report in (*self.reports.values(), rf):
            with self.subTest(scheme=report.scheme):
                self.assertTrue(report.converged)
                last = report.trace[-1]
                self.assertEqual(last.n_updated, self.data.q)
                self.assertFalse(np.isnan(last.elbo))

    def test_unfocused_traits_get_trait_factors(self):
        with mock.patch.object(
            fit, "update_trait_factors", wraps=update_trait_factors
        ) as refresh:
            report = run_cavi(
                self.data,
                small_hyper(max_iters=40, tol=1e-300),
                FitConfig(scheme=Scheme.AFI),
            )
        refreshed = sum(len(c.args[2]) for c in refresh.call_args_list)
        skipped = sum(self.data.q - row.n_updated for row in report.trace)
        self.assertGreater(skipped, 0)
        self.assertEqual(refreshed, skipped)
        self.assertEqual(
            report.local_update_count, sum(row.n_updated for row in report.trace)
        )

    def test_fewer_local_updates_than_vanilla(self):
        for scheme, report in self.reports.items():
            with self.subTest(scheme=scheme):
                self.assertTrue(report.converged)
                self.assertLess(
                    report.local_update_count, self.vanilla.local_update_count
                )

    def test_sparse_problem_saves_more_than_dense(self):
        hyper = small_hyper(max_iters=80, tol=1e-300)
        config = FitConfig(scheme=Scheme.AFI, afi_decay=0.9)
        counts = {}
        for active in (1, 11):
            data = signal_dataset(n=150, q=12, seed=32, effect=0.8, active=active)
            counts[active] = run_cavi(data, hyper, config).local_update_count
        self.assertLess(counts[1], counts[11])
        self.assertLess(counts[11], 80 * 12)

    def test_same_discoveries_as_vanilla(self):
        truth = np.zeros((self.data.p, self.data.q), dtype=bool)
        truth[1, :3] = True
        expected = confusion_metrics(self.vanilla.ppi, truth)
        signals = self.vanilla.ppi > 0.5
        for scheme, report in self.reports.items():
            with self.subTest(scheme=scheme):
                panel = confusion_metrics(report.ppi, truth)
                self.assertEqual(
                    (panel.precision, panel.recall),
                    (expected.precision, expected.recall),
                )
                np.testing.assert_array_equal(
                    discoveries(report), discoveries(self.vanilla)
                )
                np.testing.assert_allclose(
                    report.ppi[signals], self.vanilla.ppi[signals], atol=0.05
                )

    def test_same_loci_as_vanilla(self):
        expected = loci_key(self.vanilla, self.data)
        self.assertTrue(expected)
        self.assertEqual(loci_key(self.reports[Scheme.AFIO], self.data), expected)

    def test_intermittent_skips_evaluations(self):
        warmup = self.hyper.warmup_iters
        afio, afi = self.reports[Scheme.AFIO], self.reports[Scheme.AFI]
        afio_evals = sum(1 for i, _ in afio.elbo_trace if i > warmup)
        afi_evals = sum(1 for i, _ in afi.elbo_trace if i > warmup)
        self.assertLess(afio_evals, afio.iterations - warmup)
        self.assertLess(afio_evals, afi_evals)
