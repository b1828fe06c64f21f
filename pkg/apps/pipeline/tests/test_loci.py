import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from apps.core.exceptions import DimensionMismatchError
from apps.data.dataset import SnpRecord, TraitRecord
from apps.pipeline.loci import (
    LOCI_COLUMNS,
    Association,
    CisTrans,
    Locus,
    label_cis_trans,
    load_loci,
    loci_frame,
    summarize_loci,
    write_loci,
)


def snps_at(*positions):
    return [SnpRecord(id=f"rs{i}", bp=bp, maf=0.2) for i, bp in enumerate(positions)]


class SummarizeLociTests(SimpleTestCase):
    def test_single_signal(self):
        ppi = np.array([[0.9], [0.1]])
        beta = np.array([[0.3], [0.0]])
        loci = summarize_loci(ppi, beta, snps_at(1_000, 2_000), trait_ids=["a"])
        self.assertEqual(len(loci), 1)
        locus = loci[0]
        self.assertEqual(
            (locus.start_bp, locus.end_bp, locus.lead_snp), (1_000, 1_000, "rs0")
        )
        self.assertEqual(len(locus.associations), 1)
        association = locus.associations[0]
        self.assertEqual(association.trait_id, "a")
        self.assertEqual(association.max_ppi, 0.9)
        self.assertEqual(association.beta_at_max, 0.3)

    def test_no_signal(self):
        ppi = np.full((3, 2), 0.5)
        self.assertEqual(summarize_loci(ppi, ppi, snps_at(1, 2, 3)), [])

    def test_signals_within_window_merge(self):
        ppi = np.array([[0.9], [0.8]])
        loci = summarize_loci(ppi, np.zeros((2, 1)), snps_at(1_000_000, 1_400_000))
        self.assertEqual(len(loci), 1)
        self.assertEqual((loci[0].start_bp, loci[0].end_bp), (1_000_000, 1_400_000))
        self.assertEqual(loci[0].associations[0].max_ppi, 0.9)

    def test_signals_beyond_window_split(self):
        ppi = np.array([[0.9], [0.8]])
        loci = summarize_loci(ppi, np.zeros((2, 1)), snps_at(1_600_000, 1_000_000))
        self.assertEqual(len(loci), 2)
        self.assertEqual(loci[0].lead_snp, "rs1")
        self.assertEqual([locus.locus_id for locus in loci], [1, 2])

    def test_lead_is_the_snp_with_most_traits(self):
        ppi = np.array(
            [
                [0.9, 0.1, 0.1],
                [0.6, 0.7, 0.1],
                [0.1, 0.1, 0.95],
            ]
        )
        beta = np.arange(9, dtype=float).reshape(3, 3)
        loci = summarize_loci(
            ppi,
            beta,
            snps_at(1_000_000, 1_400_000, 1_800_000),
            trait_ids=["a", "b", "c"],
        )
        self.assertEqual(len(loci), 1)
        locus = loci[0]
        self.assertEqual(locus.lead_snp, "rs1")
        by_trait = {a.trait_id: a for a in locus.associations}
        self.assertEqual(by_trait["a"].snp_id, "rs0")
        self.assertEqual(by_trait["a"].beta_at_max, 0.0)
        self.assertEqual(by_trait["c"].beta_at_max, 8.0)

    def test_chained_merging(self):
        ppi = np.full((3, 1), 0.9)
        positions = snps_at(100_000, 500_000, 900_000)
        anchored = summarize_loci(ppi, np.zeros_like(ppi), positions)
        chained = summarize_loci(ppi, np.zeros_like(ppi), positions, chained=True)
        self.assertEqual(
            [locus.snp_ids for locus in anchored], [("rs0", "rs1"), ("rs2",)]
        )
        self.assertEqual(len(chained), 1)
        self.assertEqual((chained[0].start_bp, chained[0].end_bp), (100_000, 900_000))

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            summarize_loci(np.zeros((2, 2)), np.zeros((2, 3)), snps_at(1, 2))

    @hypothesis_settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_invariant_to_row_order(self, seed):
        rng = np.random.default_rng(seed)
        p, q = 15, 4
        ppi = rng.random((p, q)) ** 3
        beta = rng.normal(size=(p, q))
        snps = snps_at(*rng.choice(3_000_000, size=p, replace=False) + 1)
        order = rng.permutation(p)
        shuffled = summarize_loci(ppi[order], beta[order], [snps[i] for i in order])
        original = summarize_loci(ppi, beta, snps)
        self.assertTrue(loci_frame(original).equals(loci_frame(shuffled)))

    @hypothesis_settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000), st.booleans())
    def test_every_signal_snp_in_exactly_one_locus(self, seed, chained):
        rng = np.random.default_rng(seed)
        p, q = 20, 3
        ppi = rng.random((p, q))
        snps = snps_at(*np.sort(rng.choice(5_000_000, size=p, replace=False)) + 1)
        loci = summarize_loci(ppi, ppi, snps, chained=chained)
        members = [snp_id for locus in loci for snp_id in locus.snp_ids]
        signals = {snps[s].id for s in np.flatnonzero((ppi > 0.5).any(axis=1))}
        self.assertEqual(len(members), len(set(members)))
        self.assertEqual(set(members), signals)
        for locus in loci:
            self.assertLessEqual(locus.start_bp, locus.end_bp)
            self.assertTrue(locus.associations)


class CisTransTests(SimpleTestCase):
    def setUp(self):
        self.locus = Locus(1, 1_000_000, 1_200_000, "rs1", associations=())

    def test_labels(self):
        self.assertEqual(label_cis_trans(self.locus, 1_100_000), CisTrans.CIS)
        self.assertEqual(label_cis_trans(self.locus, 3_200_001), CisTrans.TRANS)
        self.assertEqual(label_cis_trans(self.locus, None), CisTrans.UNKNOWN)

    def test_labels_association_record(self):
        association = Association(
            "P1", 0.9, 0.2, snp_id="rs1", start_bp=1_000_000, end_bp=1_200_000
        )
        self.assertEqual(label_cis_trans(association, 150_000), CisTrans.CIS)
        self.assertEqual(label_cis_trans(association, 2_300_000), CisTrans.TRANS)
        self.assertEqual(label_cis_trans(association, None), CisTrans.UNKNOWN)
        unplaced = Association("P1", 0.9, 0.2)
        self.assertEqual(label_cis_trans(unplaced, 1_100_000), CisTrans.UNKNOWN)

    def test_window_edge_is_cis(self):
        self.assertEqual(label_cis_trans(self.locus, 2_200_000), CisTrans.CIS)
        self.assertEqual(label_cis_trans(self.locus, 1, window=999_999), CisTrans.CIS)
        self.assertEqual(label_cis_trans(self.locus, 2_200_001), CisTrans.TRANS)

    def test_summary_labels_with_trait_metadata(self):
        ppi = np.array([[0.9, 0.8, 0.7]])
        traits = [
            TraitRecord("near", gene_bp=1_500_000),
            TraitRecord("far", gene_bp=9_000_000),
            TraitRecord("unplaced"),
        ]
        loci = summarize_loci(ppi, ppi, snps_at(1_000_000), trait_meta=traits)
        labels = {a.trait_id: a.cis_trans for a in loci[0].associations}
        self.assertEqual(
            labels,
            {"near": CisTrans.CIS, "far": CisTrans.TRANS, "unplaced": CisTrans.UNKNOWN},
        )


class LociFileTests(SimpleTestCase):
    def test_written_columns_and_reload(self):
        ppi = np.array([[0.9, 0.2], [0.3, 0.85]])
        loci = summarize_loci(
            ppi, ppi / 10, snps_at(10, 2_000_000), trait_ids=["a", "b"]
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = write_loci(Path(tmp) / "loci.tsv", loci)
            header = path.read_text().splitlines()[0].split("\t")
            reloaded = load_loci(path)
        self.assertEqual(header, LOCI_COLUMNS)
        self.assertEqual([locus.lead_snp for locus in reloaded], ["rs0", "rs1"])
        self.assertEqual(reloaded[1].associations[0].max_ppi, 0.85)
        association = reloaded[1].associations[0]
        span = (association.start_bp, association.end_bp)
        self.assertEqual(span, (2_000_000, 2_000_000))
