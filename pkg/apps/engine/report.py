"""
FitReport files.

ppi.tsv / beta.tsv hold one row per SNP and one column per trait, trace.tsv
the per-iteration trace, focus.tsv the focus-set trace and report.tsv the
scalar counters as key/value rows.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from apps.core.tsv import read_table, write_table
from apps.data.io import load_labeled_matrix, write_matrix
from apps.focus.policies import FocusTraceRow

from .fit import FitReport, TraceRow

logger = logging.getLogger(__name__)

SCALAR_FIELDS = (
    "scheme",
    "seed",
    "iterations",
    "local_update_count",
    "converged",
    "final_elbo",
    "wall_time_total",
    "wall_time_local",
    "wall_time_global",
    "wall_time_elbo",
)

_INT_FIELDS = ("seed", "iterations", "local_update_count")
_FLOAT_FIELDS = (
    "final_elbo",
    "wall_time_total",
    "wall_time_local",
    "wall_time_global",
    "wall_time_elbo",
)


def write_fit_report(report, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_matrix(
        out_dir / "ppi.tsv", report.ppi, report.trait_ids, report.snp_ids, "snp_id"
    )
    write_matrix(
        out_dir / "beta.tsv",
        report.beta_mean,
        report.trait_ids,
        report.snp_ids,
        "snp_id",
    )
    write_table(
        out_dir / "trace.tsv",
        pd.DataFrame(
            [
                (row.iteration, row.elbo, row.n_updated, row.temperature)
                for row in report.trace
            ],
            columns=["iteration", "elbo", "n_updated", "temperature"],
        ),
    )
    write_table(
        out_dir / "focus.tsv",
        pd.DataFrame(
            [
                (
                    row.iteration,
                    row.epsilon,
                    row.n_selected,
                    row.mean_omega,
                    int(row.elbo_evaluated),
                )
                for row in report.focus_trace
            ],
            columns=[
                "iteration",
                "epsilon",
                "n_selected",
                "mean_omega",
                "elbo_evaluated",
            ],
        ),
    )
    scalars = []
    for name in SCALAR_FIELDS:
        value = getattr(report, name)
        if isinstance(value, (bool, np.bool_)):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        scalars.append((name, str(value)))
    write_table(out_dir / "report.tsv", pd.DataFrame(scalars, columns=["key", "value"]))
    logger.info(f"Fit report written to {out_dir}")
    return out_dir


def load_fit_report(out_dir):
    """Rebuild a FitReport (without its state) from a report directory."""
    out_dir = Path(out_dir)
    ppi, snp_ids, trait_ids = load_labeled_matrix(out_dir / "ppi.tsv")
    beta, _, _ = load_labeled_matrix(out_dir / "beta.tsv")

    scalars = dict(read_table(out_dir / "report.tsv").itertuples(index=False))
    values = {"scheme": scalars["scheme"], "converged": scalars["converged"] == "true"}
    values.update({name: int(scalars[name]) for name in _INT_FIELDS})
    values.update({name: float(scalars[name]) for name in _FLOAT_FIELDS})

    trace_frame = read_table(out_dir / "trace.tsv")
    trace = [
        TraceRow(
            int(row.iteration),
            float("nan") if row.elbo == "NA" else float(row.elbo),
            int(row.n_updated),
            float(row.temperature),
        )
        for row in trace_frame.itertuples(index=False)
    ]
    focus_trace = []
    focus_path = out_dir / "focus.tsv"
    if focus_path.exists():
        focus_trace = [
            FocusTraceRow(
                int(row.iteration),
                float(row.epsilon),
                int(row.n_selected),
                float(row.mean_omega),
                row.elbo_evaluated == "1",
            )
            for row in read_table(focus_path).itertuples(index=False)
        ]

    return FitReport(
        ppi=ppi,
        beta_mean=beta,
        elbo_trace=[(r.iteration, r.elbo) for r in trace if not np.isnan(r.elbo)],
        trace=trace,
        focus_trace=focus_trace,
        snp_ids=snp_ids,
        trait_ids=trait_ids,
        **values,
    )
