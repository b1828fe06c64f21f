from pathlib import Path

from apps.core.management.base import AfcaviCommand
from apps.data.io import load_dataset
from apps.focus.policies import Scheme
from apps.pipeline.registry import RunRecorder
from apps.variational.hyperparameters import Hyperparameters
from apps.variational.state import load_checkpoint

from ...fit import FitConfig, run_cavi
from ...report import write_fit_report


class Command(AfcaviCommand):
    help = "Fit the multi-trait model to one genotype/response pair"
    stage = "fit"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--genotypes", type=Path, required=True)
        parser.add_argument("--responses", type=Path, required=True)
        parser.add_argument(
            "--snps", type=Path, required=True, help="SNP metadata TSV"
        )
        parser.add_argument(
            "--traits", type=Path, default=None, help="Trait metadata TSV"
        )
        parser.add_argument(
            "--scheme", choices=Scheme.values, default=Scheme.VANILLA.value
        )
        parser.add_argument("--rf-fraction", type=float, default=0.5)
        parser.add_argument("--afi-decay", type=float, default=0.95)
        parser.add_argument(
            "--literal-selection",
            action="store_true",
            help="Use the ε-weighted selection formula as printed",
        )
        parser.add_argument(
            "--record-trace",
            action="store_true",
            help="Also record the from-scratch ELBO at every iteration",
        )
        parser.add_argument("--checkpoint-every", type=int, default=0)
        parser.add_argument(
            "--resume", type=Path, default=None, help="Resume from a checkpoint"
        )
        parser.add_argument(
            "--no-record",
            action="store_true",
            help="Do not log the run in the registry",
        )

    def run(self, **options):
        out = options["out"]
        seed = options["seed"] or 0
        hyper = Hyperparameters.from_settings()
        if options["config"]:
            hyper = Hyperparameters.from_config(options["config"], base=hyper)

        config = FitConfig(
            scheme=options["scheme"],
            rf_fraction=options["rf_fraction"],
            afi_decay=options["afi_decay"],
            seed=seed,
            elbo_formula_literal=options["literal_selection"],
            record_trace=options["record_trace"],
            checkpoint_every=options["checkpoint_every"],
            checkpoint_path=(
                out / "checkpoint.npz" if options["checkpoint_every"] else None
            ),
        )
        dataset = load_dataset(
            options["genotypes"],
            options["responses"],
            options["snps"],
            options["traits"],
        )
        state = load_checkpoint(options["resume"]) if options["resume"] else None

        recorder = RunRecorder(
            kind="fit",
            seed=seed,
            scheme=config.scheme,
            config_path=options["config"],
            out_dir=out,
            enabled=not options["no_record"],
        )
        with recorder:
            report = run_cavi(dataset, hyper, config, state=state)
            write_fit_report(report, out)
            recorder.add_block(0, report)

        status = "converged" if report.converged else "did not converge"
        self.success(
            f"{config.scheme} fit {status} after {report.iterations} iterations; "
            f"results in {out}"
        )
