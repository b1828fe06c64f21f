"""
Per-trait summaries for comparing the joint fit with marginal screening.

Each trait is scored once: by its largest PPI over the SNPs of a block for
the joint model, and by its smallest marginal regression p-value for
one-SNP-at-a-time screening.
"""

import numpy as np
from scipy import stats

from .metrics import roc_pr_curves


def max_ppi_per_trait(ppi):
    return np.asarray(ppi, dtype=float).max(axis=0)


def marginal_screening_pvalues(dataset):
    """
    Two-sided p-values of every single-SNP least-squares regression.

    Works on the standardized Dataset, so each slope test has n − 2 degrees
    of freedom. Returns a p by q matrix.
    """
    n = dataset.n
    d = dataset.gram_diag[:, None]
    xty = dataset.xty
    rss = np.maximum(dataset.yty[None, :] - xty**2 / d, 0.0)
    df = n - 2
    slope = xty / d
    se = np.sqrt(rss / df / d)
    with np.errstate(divide="ignore"):
        t_stat = np.where(se > 0, slope / se, np.inf)
    return 2.0 * stats.t.sf(np.abs(t_stat), df)


def min_pvalue_per_trait(pvalues):
    return np.asarray(pvalues, dtype=float).min(axis=0)


def compare_with_screening(dataset, ppi, gamma_true):
    """
    AUROC of trait-level scores against the traits with any true
    association: (joint max-PPI AUROC, marginal min-p AUROC).
    """
    active = np.asarray(gamma_true, dtype=bool).any(axis=0)
    joint = roc_pr_curves(max_ppi_per_trait(ppi), active)
    min_p = min_pvalue_per_trait(marginal_screening_pvalues(dataset))
    marginal = roc_pr_curves(-np.log10(min_p.clip(min=np.finfo(float).tiny)), active)
    return joint.auroc, marginal.auroc
