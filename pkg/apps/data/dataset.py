import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from apps.core.exceptions import (
    BlockTableError,
    ConstantPredictorError,
    DimensionMismatchError,
    EmptyBlockError,
    MetadataError,
    NonFiniteValueError,
)

logger = logging.getLogger(__name__)

# ============================================================================
# METADATA RECORDS
# ============================================================================


@dataclass(frozen=True)
class SnpRecord:
    id: str
    bp: int
    maf: float


@dataclass(frozen=True)
class TraitRecord:
    id: str
    gene_bp: Optional[int] = None


@dataclass(frozen=True)
class Block:
    block_id: int
    start_bp: int
    end_bp: int

    def contains(self, bp):
        return self.start_bp <= bp <= self.end_bp


@dataclass(frozen=True)
class BlockTable:
    """Validated, sorted, non-overlapping block boundaries."""

    blocks: tuple = ()

    @classmethod
    def from_blocks(cls, blocks):
        ordered = sorted(blocks, key=lambda b: b.start_bp)
        for block in ordered:
            if block.start_bp >= block.end_bp:
                raise BlockTableError(
                    f"Block {block.block_id} has start_bp >= end_bp",
                    code="inverted_block",
                    params={"block_ids": [block.block_id]},
                )
        for previous, current in zip(ordered, ordered[1:]):
            if current.start_bp <= previous.end_bp:
                raise BlockTableError(
                    f"Blocks {previous.block_id} and {current.block_id} overlap",
                    code="overlapping_blocks",
                    params={"block_ids": [previous.block_id, current.block_id]},
                )
        return cls(blocks=tuple(ordered))

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


# ============================================================================
# DATASET
# ============================================================================


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Standardized predictors and centered responses.

    ``X`` is stored column-major so the per-predictor sweeps of the engine
    read contiguous memory. Instances are immutable and safe to share across
    concurrent block fits; derived products are cached on first use.
    """

    X: np.ndarray
    Y: np.ndarray
    snp_meta: tuple
    trait_meta: tuple
    x_mean: np.ndarray
    x_sd: np.ndarray
    y_mean: np.ndarray
    snp_index: np.ndarray = field(repr=False, default=None)  # input column order

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def q(self):
        return self.Y.shape[1]

    @property
    def snp_ids(self):
        return tuple(s.id for s in self.snp_meta)

    @property
    def trait_ids(self):
        return tuple(t.id for t in self.trait_meta)

    @property
    def bp(self):
        return np.array([s.bp for s in self.snp_meta], dtype=np.int64)

    @cached_property
    def gram(self):
        """XᵀX, p by p."""
        return self.X.T @ self.X

    @cached_property
    def gram_diag(self):
        return np.ascontiguousarray(np.diag(self.gram))

    @cached_property
    def xty(self):
        """XᵀY, p by q."""
        return self.X.T @ self.Y

    @cached_property
    def yty(self):
        """Per-trait yᵀy."""
        return np.einsum("ij,ij->j", self.Y, self.Y)

    def to_original_scale(self, beta):
        """Convert standardized coefficients (p by q) back to per-allele effects."""
        return np.asarray(beta) / self.x_sd[:, None]


def standardize(X, Y, snp_meta, trait_meta):
    """
    Build a Dataset: X columns centered and scaled to unit sample standard
    deviation (n - 1 denominator), Y columns centered, SNPs ordered by bp.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise DimensionMismatchError(
            f"X has shape {X.shape} but Y has {Y.shape[0]} rows",
            params={"x_shape": X.shape, "y_shape": Y.shape},
        )
    if len(snp_meta) != X.shape[1] or len(trait_meta) != Y.shape[1]:
        raise DimensionMismatchError(
            f"Metadata sizes ({len(snp_meta)} SNPs, {len(trait_meta)} traits) do not "
            f"match matrix shapes {X.shape} and {Y.shape}"
        )
    if X.shape[0] < 2:
        raise DimensionMismatchError("At least two samples are required")
    for name, matrix in (("X", X), ("Y", Y)):
        bad = np.argwhere(~np.isfinite(matrix))
        if bad.size:
            row, col = (int(i) for i in bad[0])
            raise NonFiniteValueError(
                f"{name} has a non-finite value at row {row}, column {col}",
                params={"matrix": name, "row": row, "column": col},
            )
    bps = np.array([s.bp for s in snp_meta], dtype=np.int64)
    if bps.size and bps.min() <= 0:
        raise MetadataError("SNP positions must be strictly positive")

    x_mean = X.mean(axis=0)
    x_sd = X.std(axis=0, ddof=1)
    constant = np.flatnonzero(x_sd <= 1e-12 * np.maximum(1.0, np.abs(x_mean)))
    if constant.size:
        snp_id = snp_meta[int(constant[0])].id
        raise ConstantPredictorError(
            f"Constant predictor column '{snp_id}'", params={"column": snp_id}
        )

    order = np.argsort(bps, kind="stable")
    Xs = np.asfortranarray(((X - x_mean) / x_sd)[:, order])
    y_mean = Y.mean(axis=0)

    return Dataset(
        X=Xs,
        Y=np.ascontiguousarray(Y - y_mean),
        snp_meta=tuple(snp_meta[i] for i in order),
        trait_meta=tuple(trait_meta),
        x_mean=x_mean[order],
        x_sd=x_sd[order],
        y_mean=y_mean,
        snp_index=order,
    )


def slice_block(dataset, block):
    """Restrict ``dataset`` to SNPs with start_bp <= bp <= end_bp; traits unchanged."""
    bp = dataset.bp
    mask = (bp >= block.start_bp) & (bp <= block.end_bp)
    if not mask.any():
        raise EmptyBlockError(
            f"Block {block.block_id} ({block.start_bp}-{block.end_bp}) holds no SNPs",
            params={"block_id": block.block_id},
        )
    if mask.all():
        return dataset
    keep = np.flatnonzero(mask)
    logger.debug(f"Block {block.block_id}: {keep.size} of {dataset.p} SNPs")
    return Dataset(
        X=np.asfortranarray(dataset.X[:, keep]),
        Y=dataset.Y,
        snp_meta=tuple(dataset.snp_meta[i] for i in keep),
        trait_meta=dataset.trait_meta,
        x_mean=dataset.x_mean[keep],
        x_sd=dataset.x_sd[keep],
        y_mean=dataset.y_mean,
        snp_index=dataset.snp_index[keep],
    )
