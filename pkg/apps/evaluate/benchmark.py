"""
Scheme comparison over simulated replicates.

Every (replicate, FitConfig) pair is fitted independently through joblib;
the comparison table reports per-scheme means and standard errors of the
selection metrics and of the changes against the vanilla fit of the same
replicate.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from apps.core.exceptions import UndefinedMetricError
from apps.core.tsv import write_table
from apps.data.dataset import standardize
from apps.engine.fit import run_cavi
from apps.focus.policies import Scheme
from apps.simulate.generator import simulate_dataset

from .metrics import SIGNAL_THRESHOLD, confusion_metrics, relative_change

logger = logging.getLogger(__name__)

RUN_COLUMNS = (
    "iterations",
    "local_update_count",
    "wall_time_total",
    "wall_time_local",
    "wall_time_global",
    "wall_time_elbo",
)
# (column, source, sign): reductions are reported as positive numbers
CHANGE_COLUMNS = (
    ("delta_iterations", "iterations", 1.0),
    ("reduction_runtime_total", "wall_time_total", -1.0),
    ("reduction_runtime_local", "wall_time_local", -1.0),
    ("reduction_local_updates", "local_update_count", -1.0),
)
SUMMARY_COLUMNS = (
    "delta_iterations",
    "reduction_runtime_total",
    "reduction_runtime_local",
    "reduction_local_updates",
    "fpr",
    "precision",
    "recall",
    "max_ppi_difference",
)


@dataclass(frozen=True)
class BenchmarkReplicate:
    replicate: int
    dataset: object
    gamma_true: np.ndarray

    @classmethod
    def from_simulation(cls, replicate, simulation):
        dataset = standardize(
            simulation.genotypes,
            simulation.Y,
            simulation.snp_meta,
            simulation.trait_meta,
        )
        gamma = simulation.truth.gamma_true[dataset.snp_index]
        return cls(replicate=replicate, dataset=dataset, gamma_true=gamma)


@dataclass
class BenchmarkResult:
    runs: pd.DataFrame
    comparison: pd.DataFrame


def simulate_replicates(spec, count):
    """``count`` replicates of ``spec`` with seeds spec.seed, spec.seed + 1, ..."""
    return [
        BenchmarkReplicate.from_simulation(
            r, simulate_dataset(replace(spec, seed=spec.seed + r))
        )
        for r in range(count)
    ]


def config_label(config):
    if config.scheme == Scheme.RF:
        return f"rf({config.rf_fraction:g})"
    if config.scheme in (Scheme.AFI, Scheme.AFIO) and config.afi_decay != 0.95:
        return f"{config.scheme}({config.afi_decay:g})"
    return str(config.scheme)


def _fit_replicate(replicate, hyper, config, threshold):
    report = run_cavi(replicate.dataset, hyper, config)
    panel = confusion_metrics(report.ppi, replicate.gamma_true, threshold)
    row = {
        "replicate": replicate.replicate,
        "label": config_label(config),
        "scheme": str(config.scheme),
        "converged": report.converged,
        "fpr": panel.fpr,
        "precision": panel.precision,
        "recall": panel.recall,
    }
    row.update({name: getattr(report, name) for name in RUN_COLUMNS})
    return row, report.ppi


def _safe_change(value, baseline, sign):
    try:
        return sign * relative_change(value, baseline)
    except UndefinedMetricError:
        return np.nan


def benchmark_fit(replicates, hyper, configs, threshold=SIGNAL_THRESHOLD, n_jobs=1):
    """
    Fit every config on every replicate and build the comparison table.

    The baseline of the relative changes is the first vanilla config, or the
    first config when none is vanilla. ``max_ppi_difference`` is the largest
    absolute PPI difference from the baseline over the baseline's signals.
    """
    configs = list(configs)
    labels = [config_label(c) for c in configs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"Configs must have distinct labels, got {labels}")
    baseline = next(
        (label for c, label in zip(configs, labels) if c.scheme == Scheme.VANILLA),
        labels[0],
    )
    logger.info(
        f"Benchmarking {', '.join(labels)} on {len(replicates)} replicates "
        f"(n_jobs={n_jobs})"
    )

    jobs = [(r, c) for r in replicates for c in configs]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_fit_replicate)(r, hyper, c, threshold) for r, c in jobs
    )

    rows = []
    for i in range(0, len(results), len(configs)):
        group = results[i : i + len(configs)]
        by_label = dict(zip(labels, group))
        base_row, base_ppi = by_label[baseline]
        signals = base_ppi > threshold
        for row, ppi in group:
            row = dict(row)
            for column, source, sign in CHANGE_COLUMNS:
                row[column] = _safe_change(row[source], base_row[source], sign)
            row["max_ppi_difference"] = (
                float(np.max(np.abs(ppi - base_ppi)[signals]))
                if signals.any()
                else np.nan
            )
            rows.append(row)
    runs = pd.DataFrame(rows)
    return BenchmarkResult(runs=runs, comparison=comparison_table(runs, labels))


def comparison_table(runs, labels):
    """Per-label mean and standard error (n - 1 denominator) of each summary."""
    grouped = runs.groupby("label", sort=False)[list(SUMMARY_COLUMNS)]
    means = grouped.mean()
    errors = grouped.sem(ddof=1)
    table = pd.DataFrame({"label": labels})
    table["scheme"] = [
        runs.loc[runs["label"] == label, "scheme"].iloc[0] for label in labels
    ]
    table["replicates"] = [int((runs["label"] == label).sum()) for label in labels]
    for column in SUMMARY_COLUMNS:
        table[f"{column}_mean"] = means.loc[labels, column].to_numpy()
        table[f"{column}_se"] = errors.loc[labels, column].to_numpy()
    return table


def write_benchmark(result, out_dir):
    out_dir = Path(out_dir)
    write_table(out_dir / "comparison.tsv", result.comparison)
    write_table(out_dir / "runs.tsv", result.runs)
    logger.info(f"Benchmark tables written to {out_dir}")
    return out_dir
