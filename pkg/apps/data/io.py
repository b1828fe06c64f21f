"""
TSV ingestion and emission for matrices, SNP/trait metadata and block tables.

All files are tab separated with a header row, LF line endings and UTF-8
text. Floats are written with 17 significant digits so a write/read cycle
reproduces every finite value.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from apps.core.exceptions import (
    BlockTableError,
    MatrixParseError,
    MetadataError,
    NonFiniteValueError,
)
from apps.core.tsv import read_table, write_table

from .dataset import Block, BlockTable, SnpRecord, TraitRecord, standardize

logger = logging.getLogger(__name__)

SNP_COLUMNS = ["id", "bp", "maf"]
TRAIT_COLUMNS = ["id", "gene_bp"]
BLOCK_COLUMNS = ["block_id", "start_bp", "end_bp"]


@dataclass(frozen=True)
class RawMatrix:
    """A numeric matrix read from TSV with its header ids."""

    values: np.ndarray
    ids: tuple


# ============================================================================
# MATRICES
# ============================================================================


def load_matrix(path, rows_are_samples=True):
    """
    Read a numeric TSV matrix.

    With ``rows_are_samples`` false the file holds one variable per row and the
    result is transposed, so the returned matrix is always samples by
    variables with the header names as column ids.
    """
    _check_row_widths(path)
    frame = read_table(path, index_col=False)

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    values = numeric.to_numpy(dtype=float)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        row, col = (int(i) for i in bad[0])
        raise NonFiniteValueError(
            f"Non-finite or unparsable cell at row {row}, column {col} "
            f"('{frame.iat[row, col]}') in {path}",
            params={"row": row, "column": col, "path": str(path)},
        )

    ids = tuple(str(c) for c in frame.columns)
    if not rows_are_samples:
        values = values.T
    logger.debug(f"Loaded {values.shape[0]}x{values.shape[1]} matrix from {path}")
    return RawMatrix(values=np.ascontiguousarray(values), ids=ids)


def _check_row_widths(path):
    """Reject the first body row whose cell count differs from the header."""
    with open(path, encoding="utf-8") as handle:
        width = len(handle.readline().rstrip("\n").split("\t"))
        for row, line in enumerate(handle):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = len(line.split("\t"))
            if cells != width:
                raise MatrixParseError(
                    f"Ragged row {row} in {path}: {cells} cells under a "
                    f"{width}-column header",
                    params={"row": row, "path": str(path)},
                )


def write_matrix(path, values, column_ids=None, row_ids=None, row_label="id"):
    """
    Write a matrix as TSV. ``row_ids`` adds a leading label column, which is
    how ``ppi.tsv`` and ``beta.tsv`` carry SNP ids.
    """
    values = np.asarray(values, dtype=float)
    if column_ids is None:
        column_ids = [f"c{j + 1}" for j in range(values.shape[1])]
    frame = pd.DataFrame(values, columns=list(column_ids))
    if row_ids is not None:
        frame.insert(0, row_label, list(row_ids))
    return write_table(path, frame)


def load_labeled_matrix(path):
    """Read a matrix written with ``row_ids``; returns (values, row_ids, column_ids)."""
    frame = read_table(path)
    row_ids = tuple(frame.iloc[:, 0])
    body = frame.iloc[:, 1:].apply(pd.to_numeric, errors="coerce")
    return body.to_numpy(dtype=float), row_ids, tuple(body.columns)


# ============================================================================
# METADATA
# ============================================================================


def _require_columns(frame, expected, path, error=MetadataError):
    if list(frame.columns) != expected:
        raise error(
            f"{path} must have columns {' '.join(expected)}, "
            f"found {' '.join(frame.columns)}",
            code="bad_header",
        )


def load_snp_meta(path):
    frame = read_table(path)
    _require_columns(frame, SNP_COLUMNS, path)
    records = []
    for i, row in enumerate(frame.itertuples(index=False)):
        try:
            bp, maf = int(row.bp), float(row.maf)
        except ValueError:
            raise MetadataError(
                f"Row {i} of {path} has a non-numeric bp or maf", params={"row": i}
            )
        if bp <= 0 or not 0 < maf <= 0.5:
            raise MetadataError(
                f"SNP {row.id} in {path} needs bp > 0 and maf in (0, 0.5]",
                params={"row": i},
            )
        records.append(SnpRecord(id=row.id, bp=bp, maf=maf))
    return tuple(records)


def write_snp_meta(path, snp_meta):
    frame = pd.DataFrame(
        [(s.id, s.bp, s.maf) for s in snp_meta], columns=SNP_COLUMNS
    )
    return write_table(path, frame)


def load_trait_meta(path):
    """Trait ids with an optional ``gene_bp`` column; empty or NA means unknown."""
    frame = read_table(path)
    if list(frame.columns) == ["id"]:
        return tuple(TraitRecord(id=t) for t in frame["id"])
    _require_columns(frame, TRAIT_COLUMNS, path)
    records = []
    for row in frame.itertuples(index=False):
        gene_bp = None if row.gene_bp in ("", "NA") else int(row.gene_bp)
        records.append(TraitRecord(id=row.id, gene_bp=gene_bp))
    return tuple(records)


def write_trait_meta(path, trait_meta):
    frame = pd.DataFrame(
        [(t.id, t.gene_bp) for t in trait_meta], columns=TRAIT_COLUMNS
    ).astype({"gene_bp": "Int64"})
    return write_table(path, frame)


# ============================================================================
# BLOCKS
# ============================================================================


def load_blocks(path):
    """Read and validate a block table (``block_id``, ``start_bp``, ``end_bp``)."""
    frame = read_table(path)
    _require_columns(frame, BLOCK_COLUMNS, path, error=BlockTableError)
    try:
        blocks = [
            Block(
                block_id=int(r.block_id),
                start_bp=int(r.start_bp),
                end_bp=int(r.end_bp),
            )
            for r in frame.itertuples(index=False)
        ]
    except ValueError as e:
        raise BlockTableError(f"Non-integer entry in {path}: {e}", code="bad_value")
    return BlockTable.from_blocks(blocks)


def write_blocks(path, table):
    frame = pd.DataFrame(
        [(b.block_id, b.start_bp, b.end_bp) for b in table.blocks],
        columns=BLOCK_COLUMNS,
    )
    return write_table(path, frame)


# ============================================================================
# DATASETS
# ============================================================================


def load_dataset(genotypes, responses, snps, traits=None):
    """
    Read genotype and response matrices (samples in rows) plus metadata and
    return the standardized Dataset. SNP metadata is matched to genotype
    columns by id; without a trait table the response header gives the ids.
    """
    X = load_matrix(genotypes)
    Y = load_matrix(responses)
    by_id = {record.id: record for record in load_snp_meta(snps)}
    missing = [snp_id for snp_id in X.ids if snp_id not in by_id]
    if missing or len(by_id) != len(X.ids):
        raise MetadataError(
            f"SNP metadata in {snps} does not match the genotype columns of "
            f"{genotypes}" + (f" (missing {missing[0]})" if missing else ""),
            code="snp_mismatch",
        )
    snp_meta = tuple(by_id[snp_id] for snp_id in X.ids)

    if traits is None:
        trait_meta = tuple(TraitRecord(id=t) for t in Y.ids)
    else:
        trait_meta = load_trait_meta(traits)
        if tuple(t.id for t in trait_meta) != Y.ids:
            raise MetadataError(
                f"Trait ids in {traits} do not match the columns of {responses}",
                code="trait_mismatch",
            )
    return standardize(X.values, Y.values, snp_meta, trait_meta)
