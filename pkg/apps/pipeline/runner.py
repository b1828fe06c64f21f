"""
Block-wise mapping pipeline.

A pipeline run reads one chromosome's genotypes and responses, fits every
block of the block table with the configured scheme (blocks run concurrently
through joblib), writes the per-block fit reports and merges the signals of
all blocks into one chromosome-wide loci.tsv plus a run manifest.
"""

import logging
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from termcolor import colored

from apps.core.config.defaults import run_defaults
from apps.core.config.keyvalue import KeyValueFile, write_key_value
from apps.core.exceptions import (
    AfcaviValidationError,
    BlockFailure,
    ConfigKeyError,
    EmptyBlockError,
)
from apps.core.utils import derived_seed, file_sha256
from apps.data.dataset import Block, BlockTable, slice_block
from apps.data.io import load_blocks, load_dataset
from apps.engine.fit import FitConfig, run_cavi
from apps.engine.report import write_fit_report
from apps.focus.policies import Scheme
from apps.variational.hyperparameters import Hyperparameters

from .loci import summarize_loci, write_loci

logger = logging.getLogger(__name__)

FAILED_MARKER = "FAILED"
# Errors recorded as a failed block; others propagate
BLOCK_ERRORS = (AfcaviValidationError, ArithmeticError, np.linalg.LinAlgError)
REQUIRED_KEYS = ("genotypes", "responses", "snps")
CONFIG_KEYS = REQUIRED_KEYS + (
    "traits",
    "blocks",
    "hyperparameters",
    "scheme",
    "rf_fraction",
    "afi_decay",
    "n_jobs",
    "seed",
    "out",
    "threshold",
    "window_bp",
    "cis_window_bp",
    "chained",
)
VERSIONED_PACKAGES = (
    "afcavi-qtl",
    "numpy",
    "scipy",
    "pandas",
    "scikit-learn",
    "joblib",
    "django",
)


@dataclass(frozen=True)
class RunConfig:
    genotypes: Path
    responses: Path
    snps: Path
    traits: Optional[Path] = None
    blocks: Optional[Path] = None
    hyperparameters: Optional[Path] = None
    scheme: str = Scheme.VANILLA
    rf_fraction: float = 0.5
    afi_decay: float = 0.95
    n_jobs: int = 1
    seed: int = 0
    out: Path = Path("output")
    threshold: float = 0.5
    window_bp: int = 500_000
    cis_window_bp: int = 1_000_000
    chained: bool = False
    source: Optional[Path] = None

    @classmethod
    def from_file(cls, path):
        """Read a pipeline config; relative paths are taken from the file's folder."""
        source = KeyValueFile(path, allowed_keys=CONFIG_KEYS)
        missing = [key for key in REQUIRED_KEYS if key not in source]
        if missing:
            raise ConfigKeyError(
                f"{path} does not name {', '.join(missing)}",
                code="missing_key",
                params={"keys": missing},
            )
        return cls(
            genotypes=source.resolve_path("genotypes"),
            responses=source.resolve_path("responses"),
            snps=source.resolve_path("snps"),
            traits=source.resolve_path("traits"),
            blocks=source.resolve_path("blocks"),
            hyperparameters=source.resolve_path("hyperparameters"),
            scheme=source.get("scheme", str(Scheme.VANILLA)),
            rf_fraction=source.get("rf_fraction", 0.5, cast=float),
            afi_decay=source.get("afi_decay", 0.95, cast=float),
            n_jobs=source.get("n_jobs", run_defaults.get("N_JOBS"), cast=int),
            seed=source.get("seed", 0, cast=int),
            out=source.resolve_path("out") or Path(run_defaults.get("OUTPUT_DIR")),
            threshold=source.get(
                "threshold", run_defaults.get("SIGNAL_THRESHOLD"), cast=float
            ),
            window_bp=source.get(
                "window_bp", run_defaults.get("LOCUS_WINDOW_BP"), cast=int
            ),
            cis_window_bp=source.get(
                "cis_window_bp", run_defaults.get("CIS_WINDOW_BP"), cast=int
            ),
            chained=source.get("chained", False, cast=bool),
            source=Path(path),
        )

    def fit_config(self, index):
        """Block ``index`` gets its own seed derived from the run seed."""
        return FitConfig(
            scheme=self.scheme,
            rf_fraction=self.rf_fraction,
            afi_decay=self.afi_decay,
            seed=derived_seed(self.seed, index),
        )

    def load_hyperparameters(self):
        hyper = Hyperparameters.from_settings()
        if self.hyperparameters:
            hyper = Hyperparameters.from_config(self.hyperparameters, base=hyper)
        return hyper


@dataclass
class PipelineResult:
    out_dir: Path
    reports: dict = field(default_factory=dict)
    loci: list = field(default_factory=list)
    skipped_blocks: list = field(default_factory=list)
    wall_time: float = 0.0


def whole_chromosome(dataset):
    bp = dataset.bp
    return BlockTable(blocks=(Block(0, int(bp.min()), int(bp.max())),))


def _fit_block(block, data, hyper, config):
    try:
        report = run_cavi(data, hyper, config)
    except BLOCK_ERRORS as e:
        return None, f"{type(e).__name__}: {e}"
    report.state = None
    return report, ""


def merge_block_loci(reports, block_snps, trait_meta, config):
    """
    Stack the block PPI and beta matrices in block order and merge the
    signals chromosome-wide, so a locus may straddle a block boundary.
    """
    if not reports:
        return []
    block_ids = list(reports)
    ppi = np.vstack([reports[b].ppi for b in block_ids])
    beta = np.vstack([reports[b].beta_mean for b in block_ids])
    snp_meta = [snp for b in block_ids for snp in block_snps[b]]
    return summarize_loci(
        ppi,
        beta,
        snp_meta,
        trait_ids=[t.id for t in trait_meta],
        threshold=config.threshold,
        window_bp=config.window_bp,
        chained=config.chained,
        trait_meta=trait_meta,
        cis_window=config.cis_window_bp,
    )


def package_versions():
    versions = {}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(path, config, result):
    reports = list(result.reports.values())
    items = {
        "seed": config.seed,
        "scheme": str(config.scheme),
        "config": config.source or "",
        "config_hash": file_sha256(config.source) if config.source else "",
        "n_jobs": config.n_jobs,
        "blocks_fitted": sorted(result.reports),
        "blocks_skipped": result.skipped_blocks,
        "loci": len(result.loci),
        "iterations": sum(r.iterations for r in reports),
        "local_update_count": sum(r.local_update_count for r in reports),
        "all_converged": all(r.converged for r in reports),
    }
    for name, version in package_versions().items():
        items[f"version_{name.replace('-', '_')}"] = version
    items.update(
        {
            "wall_time_total": result.wall_time,
            "wall_time_blocks": sum(r.wall_time_total for r in reports),
            "wall_time_local": sum(r.wall_time_local for r in reports),
        }
    )
    return write_key_value(path, items)


def run_pipeline(config, recorder=None):
    """
    Fit every block and write ``blocks/block_<id>/``, ``loci.tsv`` and
    ``manifest.txt`` under ``config.out``.

    Blocks without SNPs are skipped with a warning. When a block fit fails,
    the reports of the other blocks are still written, a ``FAILED`` marker
    names the failed blocks and ``BlockFailure`` is raised for the first one.
    """
    started = time.perf_counter()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / FAILED_MARKER).unlink(missing_ok=True)

    hyper = config.load_hyperparameters()
    dataset = load_dataset(
        config.genotypes, config.responses, config.snps, config.traits
    )
    table = load_blocks(config.blocks) if config.blocks else whole_chromosome(dataset)
    result = PipelineResult(out_dir=out)

    jobs = []
    for index, block in enumerate(table):
        try:
            data = slice_block(dataset, block)
        except EmptyBlockError as e:
            logger.warning(f"Skipping block {block.block_id}: {e}")
            result.skipped_blocks.append(block.block_id)
            continue
        jobs.append((block, data, config.fit_config(index)))

    logger.info(
        f"Fitting {len(jobs)} blocks of {dataset.p} SNPs x {dataset.q} traits "
        f"with {config.scheme} (n_jobs={config.n_jobs})"
    )
    outcomes = Parallel(n_jobs=config.n_jobs)(
        delayed(_fit_block)(block, data, hyper, fit_config)
        for block, data, fit_config in jobs
    )

    failures = []
    block_snps = {}
    for (block, data, _), (report, reason) in zip(jobs, outcomes):
        if report is None:
            logger.error(colored(f"Block {block.block_id} failed: {reason}", "red"))
            failures.append((block.block_id, reason))
            continue
        write_fit_report(report, out / "blocks" / f"block_{block.block_id}")
        if recorder is not None:
            recorder.add_block(block.block_id, report)
        result.reports[block.block_id] = report
        block_snps[block.block_id] = data.snp_meta

    if failures:
        block_id, reason = failures[0]
        write_key_value(
            out / FAILED_MARKER,
            {
                "block_id": block_id,
                "reason": reason,
                "failed_blocks": [b for b, _ in failures],
            },
        )
        raise BlockFailure(block_id, reason)

    result.loci = merge_block_loci(
        result.reports, block_snps, dataset.trait_meta, config
    )
    write_loci(out / "loci.tsv", result.loci)
    result.wall_time = time.perf_counter() - started
    write_manifest(out / "manifest.txt", config, result)
    logger.info(
        colored(
            f"{len(result.loci)} loci from {len(result.reports)} blocks in "
            f"{result.wall_time:.1f}s",
            "green",
        )
    )
    return result
