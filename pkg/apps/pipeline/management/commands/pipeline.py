from dataclasses import replace

from apps.core.management.base import AfcaviCommand

from ...models import RunKind
from ...registry import RunRecorder
from ...runner import FAILED_MARKER, RunConfig, run_pipeline


class Command(AfcaviCommand):
    """
    Fit every block of a chromosome and summarize the signals into loci.

    Usage:
        python manage.py pipeline --config chr1.txt

        # Four blocks at a time, outputs somewhere else, not recorded
        python manage.py pipeline --config chr1.txt --n-jobs 4 \\
            --out runs/chr1 --no-record

    The config file is a key=value file naming genotypes, responses, snps,
    and optionally traits, blocks, hyperparameters, scheme, rf_fraction,
    afi_decay, n_jobs, seed, out, threshold, window_bp, cis_window_bp and
    chained. Relative paths are read from the config file's folder.

    Note:
        - --seed, --out and --n-jobs override the config file
        - A failed block leaves a FAILED marker next to the partial outputs
    """

    help = "Block-wise fit and locus summary of one chromosome"
    stage = "pipeline"
    config_required = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--n-jobs", type=int, default=None)
        parser.add_argument(
            "--no-record",
            action="store_true",
            help="Do not log the run in the registry",
        )

    def run(self, **options):
        config = RunConfig.from_file(options["config"])
        overrides = {}
        if options["seed"] is not None:
            overrides["seed"] = options["seed"]
        if options["out_given"]:
            overrides["out"] = options["out"]
        if options["n_jobs"] is not None:
            overrides["n_jobs"] = options["n_jobs"]
        config = replace(config, **overrides)

        recorder = RunRecorder(
            kind=RunKind.PIPELINE,
            seed=config.seed,
            scheme=config.scheme,
            config_path=config.source,
            out_dir=config.out,
            enabled=not options["no_record"],
        )
        try:
            with recorder:
                result = run_pipeline(config, recorder=recorder)
        except Exception:
            self.stderr.write(
                f"Partial outputs in {config.out} ({FAILED_MARKER} marker)"
            )
            raise

        skipped = (
            f", {len(result.skipped_blocks)} empty blocks skipped"
            if result.skipped_blocks
            else ""
        )
        self.success(
            f"{len(result.loci)} loci from {len(result.reports)} blocks{skipped}; "
            f"results in {config.out}"
        )
