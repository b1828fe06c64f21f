from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.management.base import CommandError

from apps.core.config.defaults import run_defaults
from apps.core.management.base import AfcaviCommand
from apps.core.tsv import write_table
from apps.data.io import load_labeled_matrix, load_snp_meta
from apps.engine.fit import FitConfig, run_cavi
from apps.focus.policies import Scheme
from apps.pipeline.loci import summarize_loci
from apps.simulate.scenario import SimulationSpec
from apps.variational.hyperparameters import Hyperparameters

from ...benchmark import benchmark_fit, simulate_replicates, write_benchmark
from ...metrics import (
    locus_level_metrics,
    roc_pr_curves,
    score_panel,
    write_score_panels,
)
from ...screening import compare_with_screening


class Command(AfcaviCommand):
    """
    Score fits against a known association pattern and compare schemes.

    Usage:
        # Score a fit directory against simulated truth
        python manage.py evaluate score --ppi runs/fit/ppi.tsv \\
            --truth runs/sim/gamma_true.tsv --snps runs/sim/snps.tsv

        # Compare schemes on 10 replicates of a scenario file
        python manage.py evaluate benchmark --config scenario.txt \\
            --replicates 10 --schemes vanilla,rf,afe,afi,afio --n-jobs 4

        # Joint fit against marginal screening on the toy scenario
        python manage.py evaluate toy --replicates 10

    Note:
        - --config names a simulation scenario; --hyper a hyperparameter file
        - Undefined ratios are written as NA
    """

    help = "Score fitted PPIs, benchmark schemes or run the toy comparison"
    stage = "evaluate"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("action", choices=["score", "benchmark", "toy"])
        parser.add_argument("--ppi", type=Path, help="ppi.tsv of a fit")
        parser.add_argument("--truth", type=Path, help="gamma_true.tsv")
        parser.add_argument(
            "--snps", type=Path, help="SNP metadata; adds locus-level scores"
        )
        parser.add_argument("--threshold", type=float, default=None)
        parser.add_argument("--window-bp", type=int, default=None)
        parser.add_argument("--preset", choices=["default", "reference"], default=None)
        parser.add_argument("--a-q", type=float, default=None)
        parser.add_argument("--replicates", type=int, default=10)
        parser.add_argument(
            "--schemes",
            default=",".join(Scheme.values),
            help="Comma-separated schemes to compare",
        )
        parser.add_argument("--rf-fraction", type=float, default=0.5)
        parser.add_argument("--afi-decay", type=float, default=0.95)
        parser.add_argument("--n-jobs", type=int, default=None)
        parser.add_argument("--hyper", type=Path, default=None)

    def run(self, **options):
        self.threshold = options["threshold"] or run_defaults.get("SIGNAL_THRESHOLD")
        handler = getattr(self, f"run_{options['action']}")
        return handler(**options)

    def hyperparameters(self, options):
        hyper = Hyperparameters.from_settings()
        if options["hyper"]:
            hyper = Hyperparameters.from_config(options["hyper"], base=hyper)
        return hyper

    def scenario(self, options, default):
        seed = options["seed"] or 0
        if options["preset"] == "reference":
            spec = SimulationSpec.reference(seed=seed)
        elif options["preset"] == "default":
            spec = SimulationSpec(seed=seed)
        else:
            spec = default(seed)
        if options["config"]:
            spec = SimulationSpec.from_config(options["config"], base=spec)
        if options["a_q"] is not None:
            spec = replace(spec, a_q=options["a_q"])
        if options["seed"] is not None:
            spec = replace(spec, seed=options["seed"])
        return spec

    # ------------------------------------------------------------------

    def run_score(self, **options):
        if not (options["ppi"] and options["truth"]):
            raise CommandError("[evaluate] score needs --ppi and --truth")
        ppi, snp_ids, trait_ids = load_labeled_matrix(options["ppi"])
        truth, truth_snps, truth_traits = load_labeled_matrix(options["truth"])
        if truth_traits != trait_ids or set(truth_snps) != set(snp_ids):
            raise CommandError("[evaluate] PPI and truth label different SNPs/traits")
        row = {snp_id: i for i, snp_id in enumerate(truth_snps)}
        truth = truth[[row[snp_id] for snp_id in snp_ids]].astype(bool)

        panels = {"grid": score_panel(ppi, truth, self.threshold)}
        panels["trait"] = score_panel(
            ppi.max(axis=0), truth.any(axis=0), self.threshold
        )
        if options["snps"]:
            by_id = {s.id: s for s in load_snp_meta(options["snps"])}
            snp_meta = [by_id[snp_id] for snp_id in snp_ids]
            window = options["window_bp"] or run_defaults.get("LOCUS_WINDOW_BP")
            loci = summarize_loci(
                ppi,
                np.zeros_like(ppi),
                snp_meta,
                trait_ids=trait_ids,
                threshold=self.threshold,
                window_bp=window,
            )
            panels["locus"] = locus_level_metrics(
                loci, truth, snp_meta, trait_ids, window
            )

        out = options["out"]
        write_score_panels(out / "scores.tsv", panels)
        if truth.any() and not truth.all():
            curves = roc_pr_curves(ppi, truth)
            write_table(out / "roc.tsv", curves.roc)
            write_table(out / "pr.tsv", curves.pr)
        grid = panels["grid"]
        self.success(
            f"precision {grid.precision:.3f}, recall {grid.recall:.3f}, "
            f"FPR {grid.fpr:.2e}; scores in {out}"
        )

    def run_benchmark(self, **options):
        spec = self.scenario(options, lambda seed: SimulationSpec.reference(seed=seed))
        hyper = self.hyperparameters(options)
        seed = options["seed"] or 0
        schemes = [s.strip() for s in options["schemes"].split(",") if s.strip()]
        unknown = sorted(set(schemes) - set(Scheme.values))
        if unknown:
            raise CommandError(f"[evaluate] unknown schemes: {', '.join(unknown)}")
        configs = [
            FitConfig(
                scheme=scheme,
                rf_fraction=options["rf_fraction"],
                afi_decay=options["afi_decay"],
                seed=seed,
            )
            for scheme in schemes
        ]
        replicates = simulate_replicates(spec, options["replicates"])
        n_jobs = options["n_jobs"] or run_defaults.get("N_JOBS")
        result = benchmark_fit(replicates, hyper, configs, self.threshold, n_jobs)
        write_benchmark(result, options["out"])
        spec.to_config(options["out"] / "scenario.txt")
        self.success(
            f"Compared {len(configs)} schemes on {len(replicates)} replicates; "
            f"table in {options['out'] / 'comparison.tsv'}"
        )

    def run_toy(self, **options):
        spec = self.scenario(options, lambda seed: SimulationSpec.toy(seed=seed))
        hyper = self.hyperparameters(options)
        rows = []
        for replicate in simulate_replicates(spec, options["replicates"]):
            report = run_cavi(
                replicate.dataset, hyper, FitConfig(seed=options["seed"] or 0)
            )
            joint, marginal = compare_with_screening(
                replicate.dataset, report.ppi, replicate.gamma_true
            )
            rows.append((replicate.replicate, joint, marginal, joint > marginal))
        frame = pd.DataFrame(
            rows, columns=["replicate", "auroc_joint", "auroc_marginal", "joint_wins"]
        )
        write_table(options["out"] / "toy.tsv", frame)
        self.success(
            f"Joint model ahead on {int(frame['joint_wins'].sum())} of "
            f"{len(frame)} replicates"
        )
