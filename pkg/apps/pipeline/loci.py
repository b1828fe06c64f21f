"""
Locus-wise summaries of a fitted PPI matrix.

Signal SNPs (any trait PPI above the threshold) are merged greedily around
lead SNPs; each locus then reports, per trait, the largest PPI over its
SNPs and the effect estimate at that SNP.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import pandas as pd
from django.db import models

from apps.core.exceptions import DimensionMismatchError
from apps.core.tsv import read_table, write_table

logger = logging.getLogger(__name__)

LOCI_COLUMNS = [
    "locus_id",
    "start_bp",
    "end_bp",
    "lead_snp",
    "trait_id",
    "max_ppi",
    "beta_at_max",
    "cis_trans",
]


class CisTrans(models.TextChoices):
    CIS = "cis", "cis"
    TRANS = "trans", "trans"
    UNKNOWN = "unknown", "unknown"


@dataclass(frozen=True)
class Association:
    trait_id: str
    max_ppi: float
    beta_at_max: float
    snp_id: str = ""
    cis_trans: str = CisTrans.UNKNOWN
    start_bp: Optional[int] = None
    end_bp: Optional[int] = None

    def distance_to(self, bp):
        """Distance from ``bp`` to the span of the locus holding the association."""
        return max(self.start_bp - bp, 0, bp - self.end_bp)


@dataclass(frozen=True)
class Locus:
    locus_id: int
    start_bp: int
    end_bp: int
    lead_snp: str
    associations: tuple
    snp_ids: tuple = ()

    def distance_to(self, bp):
        """Distance from ``bp`` to the nearest point of the locus span."""
        return max(self.start_bp - bp, 0, bp - self.end_bp)


def _merge_members(lead, candidates, bp, window_bp, chained):
    if not chained:
        return [s for s in candidates if abs(bp[s] - bp[lead]) <= window_bp]
    members, frontier = {lead}, [lead]
    while frontier:
        anchor = frontier.pop()
        for s in candidates:
            if s not in members and abs(bp[s] - bp[anchor]) <= window_bp:
                members.add(s)
                frontier.append(s)
    return sorted(members, key=lambda s: (bp[s], s))


def summarize_loci(
    ppi,
    beta,
    snp_meta,
    trait_ids=None,
    threshold=0.5,
    window_bp=500_000,
    chained=False,
    trait_meta=None,
    cis_window=1_000_000,
):
    """
    Greedy lead-anchored locus merging.

    The unassigned signal SNP with the most associated traits (ties: smaller
    bp) leads the next locus and takes every unassigned signal SNP within
    ``window_bp`` of it. With ``chained`` the window is applied from every
    member instead, so neighbours of neighbours join the locus as well.
    ``trait_meta`` adds cis/trans labels.
    """
    ppi = np.asarray(ppi, dtype=float)
    beta = np.asarray(beta, dtype=float)
    p, q = ppi.shape
    if beta.shape != ppi.shape or len(snp_meta) != p:
        raise DimensionMismatchError(
            f"PPI {ppi.shape}, beta {beta.shape} and {len(snp_meta)} SNP records "
            "do not line up"
        )
    if trait_ids is None and trait_meta:
        trait_ids = [t.id for t in trait_meta]
    elif trait_ids is None:
        trait_ids = [f"t{j + 1}" for j in range(q)]
    gene_bp = {t.id: t.gene_bp for t in trait_meta} if trait_meta else {}

    order = np.argsort([s.bp for s in snp_meta], kind="stable")
    ppi, beta = ppi[order], beta[order]
    snps = [snp_meta[i] for i in order]
    bp = np.array([s.bp for s in snps])

    hits = ppi > threshold
    counts = hits.sum(axis=1)
    unassigned = [s for s in range(p) if counts[s] > 0]

    loci = []
    while unassigned:
        lead = min(unassigned, key=lambda s: (-counts[s], bp[s], s))
        members = _merge_members(lead, unassigned, bp, window_bp, chained)
        member_set = set(members)
        unassigned = [s for s in unassigned if s not in member_set]

        start_bp, end_bp = int(bp[members].min()), int(bp[members].max())
        block = ppi[members]
        best = np.argmax(block, axis=0)
        associations = []
        for t in np.flatnonzero(block.max(axis=0) > threshold):
            snp = members[best[t]]
            associations.append(
                Association(
                    trait_id=trait_ids[t],
                    max_ppi=float(ppi[snp, t]),
                    beta_at_max=float(beta[snp, t]),
                    snp_id=snps[snp].id,
                    start_bp=start_bp,
                    end_bp=end_bp,
                )
            )
        locus = Locus(
            locus_id=len(loci) + 1,
            start_bp=start_bp,
            end_bp=end_bp,
            lead_snp=snps[lead].id,
            associations=tuple(associations),
            snp_ids=tuple(snps[s].id for s in members),
        )
        if trait_meta:
            locus = label_locus(locus, gene_bp, cis_window)
        loci.append(locus)

    logger.debug(f"{int((counts > 0).sum())} signal SNPs in {len(loci)} loci")
    return loci


def label_cis_trans(association, gene_bp, window=1_000_000):
    """
    cis when the trait's gene lies within ``window`` bp of the span of the
    association's locus. A Locus works too; an association without a span
    is unknown.
    """
    if gene_bp is None or association.start_bp is None:
        return CisTrans.UNKNOWN
    if association.distance_to(gene_bp) <= window:
        return CisTrans.CIS
    return CisTrans.TRANS


def label_locus(locus, gene_bp, window=1_000_000):
    associations = []
    for a in locus.associations:
        a = replace(a, start_bp=locus.start_bp, end_bp=locus.end_bp)
        associations.append(
            replace(a, cis_trans=label_cis_trans(a, gene_bp.get(a.trait_id), window))
        )
    return replace(locus, associations=tuple(associations))


# ============================================================================
# LOCI.TSV
# ============================================================================


def loci_frame(loci):
    rows = [
        (
            locus.locus_id,
            locus.start_bp,
            locus.end_bp,
            locus.lead_snp,
            a.trait_id,
            a.max_ppi,
            a.beta_at_max,
            str(a.cis_trans),
        )
        for locus in loci
        for a in locus.associations
    ]
    return pd.DataFrame(rows, columns=LOCI_COLUMNS)


def write_loci(path, loci):
    return write_table(path, loci_frame(loci))


def load_loci(path):
    """Rebuild loci from loci.tsv (member SNP lists are not stored)."""
    frame = read_table(path)
    loci = []
    for locus_id, rows in frame.groupby("locus_id", sort=False):
        first = rows.iloc[0]
        loci.append(
            Locus(
                locus_id=int(locus_id),
                start_bp=int(first.start_bp),
                end_bp=int(first.end_bp),
                lead_snp=first.lead_snp,
                associations=tuple(
                    Association(
                        trait_id=r.trait_id,
                        max_ppi=float(r.max_ppi),
                        beta_at_max=float(r.beta_at_max),
                        cis_trans=CisTrans(r.cis_trans),
                        start_bp=int(r.start_bp),
                        end_bp=int(r.end_bp),
                    )
                    for r in rows.itertuples(index=False)
                ),
            )
        )
    return loci
