import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from apps.core.exceptions import (
    ConstantPredictorError,
    DimensionMismatchError,
    DosageError,
    EmptyBlockError,
)
from apps.data.dataset import Block, SnpRecord, TraitRecord, slice_block, standardize
from apps.data.dosage import dosage_to_genotype


def make_meta(p, q, spacing=1000):
    snps = tuple(
        SnpRecord(id=f"rs{s}", bp=(s + 1) * spacing, maf=0.3) for s in range(p)
    )
    traits = tuple(TraitRecord(id=f"t{t}") for t in range(q))
    return snps, traits


def random_dataset(n=40, p=10, q=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.binomial(2, 0.4, size=(n, p)).astype(float)
    X[0, :] = 0
    X[1, :] = 2
    Y = rng.normal(size=(n, q))
    return standardize(X, Y, *make_meta(p, q))


class StandardizeTests(SimpleTestCase):
    def test_small_column(self):
        data = standardize(
            np.array([[1.0], [2.0], [3.0]]), np.zeros((3, 1)), *make_meta(1, 1)
        )
        np.testing.assert_allclose(data.X[:, 0], [-1.0, 0.0, 1.0])

    def test_constant_response_is_centered(self):
        data = standardize(
            np.array([[1.0], [2.0], [3.0]]), np.full((3, 1), 5.0), *make_meta(1, 1)
        )
        np.testing.assert_array_equal(data.Y[:, 0], [0.0, 0.0, 0.0])

    def test_constant_predictor_rejected(self):
        with self.assertRaises(ConstantPredictorError) as ctx:
            standardize(np.full((3, 1), 2.0), np.zeros((3, 1)), *make_meta(1, 1))
        self.assertEqual(ctx.exception.params["column"], "rs0")

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            standardize(np.ones((3, 1)), np.zeros((4, 1)), *make_meta(1, 1))

    def test_invariants(self):
        data = random_dataset()
        self.assertLess(np.abs(data.X.mean(axis=0)).max(), 1e-10)
        np.testing.assert_allclose(data.X.std(axis=0, ddof=1), 1.0, atol=1e-12)
        self.assertLess(np.abs(data.Y.mean(axis=0)).max(), 1e-10)
        self.assertTrue(data.X.flags.f_contiguous)

    def test_snps_sorted_by_position(self):
        snps = (
            SnpRecord("b", 300, 0.2),
            SnpRecord("a", 100, 0.2),
            SnpRecord("c", 200, 0.2),
        )
        X = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 0.0], [2.0, 2.0, 1.0]])
        data = standardize(X, np.zeros((3, 1)), snps, (TraitRecord("t"),))
        self.assertEqual(data.snp_ids, ("a", "c", "b"))
        np.testing.assert_allclose(data.X[:, 0], [0.0, -1.0, 1.0])

    def test_idempotent(self):
        data = random_dataset()
        again = standardize(data.X, data.Y, data.snp_meta, data.trait_meta)
        self.assertLess(np.abs(again.X - data.X).max(), 1e-12)
        self.assertLess(np.abs(again.Y - data.Y).max(), 1e-12)

    def test_original_scale(self):
        data = random_dataset()
        beta = np.ones((data.p, data.q))
        np.testing.assert_allclose(
            data.to_original_scale(beta) * data.x_sd[:, None], beta
        )


class SliceBlockTests(SimpleTestCase):
    def setUp(self):
        self.data = random_dataset(p=12)

    def test_full_block_is_identity(self):
        block = Block(1, 1, 10**9)
        self.assertIs(slice_block(self.data, block), self.data)

    def test_counts_snps_in_range(self):
        block = Block(1, self.data.snp_meta[4].bp, self.data.snp_meta[8].bp)
        sub = slice_block(self.data, block)
        self.assertEqual(sub.p, 5)
        self.assertEqual(sub.q, self.data.q)
        np.testing.assert_array_equal(sub.X, self.data.X[:, 4:9])

    def test_block_past_last_snp(self):
        with self.assertRaises(EmptyBlockError):
            slice_block(self.data, Block(9, 10**8, 10**8 + 5))

    @hypothesis_settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(1, 11999), min_size=0, max_size=6, unique=True))
    def test_partition_covers_each_snp_once(self, cuts):
        edges = [0] + sorted(cuts) + [13000]
        seen = []
        for i, (start, end) in enumerate(zip(edges, edges[1:])):
            block = Block(i, start + 1, end)
            try:
                seen.extend(slice_block(self.data, block).snp_ids)
            except EmptyBlockError:
                continue
        self.assertEqual(sorted(seen), sorted(self.data.snp_ids))
        self.assertEqual(len(seen), len(set(seen)))


class DosageTests(SimpleTestCase):
    def test_homozygous_reference(self):
        self.assertEqual(dosage_to_genotype(1, 0, 0), 0.0)

    def test_homozygous_alternative(self):
        self.assertEqual(dosage_to_genotype(0, 0, 1), 2.0)

    def test_mixed(self):
        self.assertAlmostEqual(dosage_to_genotype(0.1, 0.7, 0.2), 1.1, places=12)

    def test_vectorized(self):
        result = dosage_to_genotype(
            np.array([1.0, 0.0]), np.array([0.0, 0.5]), np.array([0.0, 0.5])
        )
        np.testing.assert_allclose(result, [0.0, 1.5])

    def test_off_simplex_rejected(self):
        with self.assertRaises(DosageError):
            dosage_to_genotype(0.5, 0.5, 0.5)
        with self.assertRaises(DosageError):
            dosage_to_genotype(-0.1, 0.6, 0.5)
