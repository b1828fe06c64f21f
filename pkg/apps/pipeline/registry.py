"""
Recording of command-line runs in the run registry.

``RunRecorder`` wraps a fit or pipeline run: it opens a ``PipelineRun`` row
on entry, adds one ``BlockFit`` row per finished block and closes the run as
succeeded or failed on exit. Database problems only disable recording.
"""

import logging

import numpy as np
from django.db import DatabaseError
from termcolor import colored

from apps.core.utils import file_sha256

from .models import BlockFit, PipelineRun, RunStatus

logger = logging.getLogger(__name__)


class RunRecorder:
    def __init__(
        self, kind, seed, scheme, config_path=None, out_dir=None, enabled=True
    ):
        self.kind = kind
        self.seed = seed
        self.scheme = str(scheme)
        self.config_path = config_path
        self.out_dir = out_dir
        self.enabled = enabled
        self.run = None

    def __enter__(self):
        if not self.enabled:
            return self
        try:
            self.run = PipelineRun.objects.create(
                kind=self.kind,
                seed=self.seed,
                scheme=self.scheme,
                config_path=str(self.config_path or ""),
                config_hash=file_sha256(self.config_path) if self.config_path else "",
                out_dir=str(self.out_dir or ""),
            )
        except DatabaseError as e:
            logger.warning(
                colored(f"Run registry unavailable, not recording: {e}", "red")
            )
            self.run = None
        return self

    def add_block(self, block_id, report):
        if self.run is None:
            return None
        final_elbo = float(report.final_elbo)
        try:
            return BlockFit.objects.create(
                run=self.run,
                block_id=block_id,
                n_snps=report.p,
                n_traits=report.q,
                iterations=report.iterations,
                local_update_count=report.local_update_count,
                converged=bool(report.converged),
                final_elbo=final_elbo if np.isfinite(final_elbo) else None,
                wall_time_total=report.wall_time_total,
                wall_time_local=report.wall_time_local,
            )
        except DatabaseError as e:
            logger.warning(colored(f"Could not record block {block_id}: {e}", "red"))
            return None

    def __exit__(self, exc_type, exc, tb):
        if self.run is None:
            return False
        try:
            if exc is None:
                self.run.finish(RunStatus.SUCCEEDED)
            else:
                self.run.finish(RunStatus.FAILED, str(exc) or exc_type.__name__)
        except DatabaseError as e:
            logger.warning(colored(f"Could not close {self.run}: {e}", "red"))
        return False
