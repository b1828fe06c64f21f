"""
Selection scores against a known association pattern.

Undefined ratios (0/0) are reported as ``nan`` and written as ``NA``; they
are never replaced by 0.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.metrics import (
    auc,
    average_precision_score,
    precision_recall_curve,
    roc_curve,
)

from apps.core.exceptions import DimensionMismatchError, UndefinedMetricError
from apps.core.tsv import write_table
from apps.pipeline.loci import summarize_loci

logger = logging.getLogger(__name__)

UNDEFINED = float("nan")
SIGNAL_THRESHOLD = 0.5


@dataclass(frozen=True)
class ScorePanel:
    fpr: float
    precision: float
    recall: float
    threshold: float
    auroc: float = UNDEFINED
    auprc: float = UNDEFINED
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def as_row(self):
        return {
            "threshold": self.threshold,
            "fpr": self.fpr,
            "precision": self.precision,
            "recall": self.recall,
            "auroc": self.auroc,
            "auprc": self.auprc,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
        }


@dataclass(frozen=True)
class CurveSummary:
    auroc: float
    auprc: float
    roc: pd.DataFrame = field(repr=False)
    pr: pd.DataFrame = field(repr=False)


def _ratio(numerator, denominator):
    return numerator / denominator if denominator else UNDEFINED


def confusion_metrics(scores, truth, threshold=SIGNAL_THRESHOLD):
    """FPR, precision and recall of ``scores > threshold`` against ``truth``."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    if scores.shape != truth.shape:
        raise DimensionMismatchError(
            f"Scores {scores.shape} and truth {truth.shape} differ in shape"
        )
    called = scores > threshold
    tp = int(np.sum(called & truth))
    fp = int(np.sum(called & ~truth))
    fn = int(np.sum(~called & truth))
    tn = int(np.sum(~called & ~truth))
    return ScorePanel(
        fpr=_ratio(fp, fp + tn),
        precision=_ratio(tp, tp + fp),
        recall=_ratio(tp, tp + fn),
        threshold=float(threshold),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


def roc_pr_curves(scores, truth):
    """
    ROC and PR curves over the unique score values.

    AUROC uses the trapezoid rule; AUPRC is the step-interpolated average
    precision. Tied scores share one threshold point.
    """
    scores = np.ravel(np.asarray(scores, dtype=float))
    truth = np.ravel(np.asarray(truth, dtype=bool))
    if truth.all() or not truth.any():
        raise UndefinedMetricError(
            "ROC/PR curves need at least one positive and one negative unit",
            params={"positives": int(truth.sum()), "units": int(truth.size)},
        )
    fpr, tpr, roc_thresholds = roc_curve(truth, scores, drop_intermediate=False)
    precision, recall, pr_thresholds = precision_recall_curve(truth, scores)
    return CurveSummary(
        auroc=float(auc(fpr, tpr)),
        auprc=float(average_precision_score(truth, scores)),
        roc=pd.DataFrame({"threshold": roc_thresholds, "fpr": fpr, "tpr": tpr}),
        pr=pd.DataFrame(
            {
                "threshold": np.append(pr_thresholds, np.inf),
                "precision": precision,
                "recall": recall,
            }
        ),
    )


def score_panel(scores, truth, threshold=SIGNAL_THRESHOLD):
    """Confusion metrics plus AUROC/AUPRC over the flattened grid."""
    panel = confusion_metrics(scores, truth, threshold)
    try:
        curves = roc_pr_curves(scores, truth)
    except UndefinedMetricError as e:
        logger.warning(f"AUCs undefined: {e}")
        return panel
    row = panel.as_row()
    row.update(auroc=curves.auroc, auprc=curves.auprc)
    return ScorePanel(**row)


def relative_change(metric_method, metric_vanilla):
    """Percentage change of a metric against the vanilla baseline."""
    if metric_vanilla == 0:
        raise UndefinedMetricError(
            "Relative change against a zero baseline is undefined",
            params={"method": metric_method},
        )
    return (metric_method - metric_vanilla) / metric_vanilla * 100.0


# ============================================================================
# LOCUS LEVEL
# ============================================================================


def locus_truth_units(loci, gamma_true, snp_meta, trait_ids):
    """
    Units for locus-level scoring: one per (locus, trait) pair.

    A unit is called when the trait is reported in the locus and is true
    when the trait has any true association with a SNP inside the locus
    span. Returns (called, truth) boolean arrays of shape (n_loci, q).
    """
    gamma_true = np.asarray(gamma_true, dtype=bool)
    bp = np.array([s.bp for s in snp_meta])
    column = {trait_id: j for j, trait_id in enumerate(trait_ids)}
    called = np.zeros((len(loci), len(trait_ids)), dtype=bool)
    truth = np.zeros_like(called)
    for i, locus in enumerate(loci):
        inside = (bp >= locus.start_bp) & (bp <= locus.end_bp)
        truth[i] = gamma_true[inside].any(axis=0)
        for association in locus.associations:
            called[i, column[association.trait_id]] = True
    return called, truth


def locus_level_metrics(loci, gamma_true, snp_meta, trait_ids, window_bp=500_000):
    """
    Confusion metrics on merged loci.

    True associations whose SNP falls outside every reported locus are
    grouped into loci of their own with the same merge rule; each of their
    (locus, trait) units with a true association counts as a missed call.
    """
    gamma_true = np.asarray(gamma_true, dtype=bool)
    called, truth = locus_truth_units(loci, gamma_true, snp_meta, trait_ids)

    bp = np.array([s.bp for s in snp_meta])
    covered = np.zeros(bp.size, dtype=bool)
    for locus in loci:
        covered |= (bp >= locus.start_bp) & (bp <= locus.end_bp)
    missed_gamma = gamma_true & ~covered[:, None]
    missed = summarize_loci(
        missed_gamma.astype(float),
        np.zeros(gamma_true.shape),
        snp_meta,
        trait_ids=trait_ids,
        threshold=SIGNAL_THRESHOLD,
        window_bp=window_bp,
    )
    _, missed_truth = locus_truth_units(missed, missed_gamma, snp_meta, trait_ids)

    all_called = np.vstack([called, np.zeros_like(missed_truth)])
    all_truth = np.vstack([truth, missed_truth])
    return confusion_metrics(all_called.astype(float), all_truth, SIGNAL_THRESHOLD)


def write_score_panels(path, panels):
    """Write ``{label: ScorePanel}`` as one TSV row per label."""
    frame = pd.DataFrame(
        [{"unit": label, **panel.as_row()} for label, panel in panels.items()]
    )
    return write_table(path, frame)
