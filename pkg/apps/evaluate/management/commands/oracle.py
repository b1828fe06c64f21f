from pathlib import Path

import pandas as pd
from django.core.management.base import CommandError

from apps.core.config.keyvalue import write_key_value
from apps.core.management.base import AfcaviCommand
from apps.core.tsv import write_table
from apps.data.io import load_dataset

from ...oracle import MAX_ORACLE_P, dataset_oracle


class Command(AfcaviCommand):
    """
    Exact posterior of one trait by enumerating every inclusion pattern.

    Usage:
        python manage.py oracle --genotypes geno.tsv --responses resp.tsv \\
            --snps snps.tsv --trait prot1 --tau 1.5 --sigma2 0.5 --prior 0.1

    Note:
        - Limited to at most 12 SNPs
        - Noise precision, slab variance and inclusion prior are held fixed
    """

    help = f"Exact PPIs and log evidence for one trait (p <= {MAX_ORACLE_P})"
    stage = "oracle"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--genotypes", type=Path, required=True)
        parser.add_argument("--responses", type=Path, required=True)
        parser.add_argument("--snps", type=Path, required=True)
        parser.add_argument("--traits", type=Path, default=None)
        parser.add_argument(
            "--trait", default=None, help="Trait id (default: the first trait)"
        )
        parser.add_argument("--tau", type=float, required=True)
        parser.add_argument("--sigma2", type=float, required=True)
        parser.add_argument("--prior", type=float, required=True)

    def run(self, **options):
        dataset = load_dataset(
            options["genotypes"],
            options["responses"],
            options["snps"],
            options["traits"],
        )
        trait_id = options["trait"] or dataset.trait_ids[0]
        if trait_id not in dataset.trait_ids:
            raise CommandError(f"[oracle] unknown trait {trait_id!r}")
        trait = dataset.trait_ids.index(trait_id)
        if options["tau"] <= 0 or options["sigma2"] <= 0:
            raise CommandError("[oracle] --tau and --sigma2 must be positive")
        if not 0 <= options["prior"] <= 1:
            raise CommandError("[oracle] --prior must lie in [0, 1]")

        result = dataset_oracle(
            dataset, trait, options["tau"], options["sigma2"], options["prior"]
        )
        out = options["out"]
        write_table(
            out / "oracle.tsv",
            pd.DataFrame(
                {
                    "snp_id": dataset.snp_ids,
                    "ppi": result.ppi,
                    "posterior_mean": result.posterior_mean,
                    "slab_mean": result.slab_mean,
                    "slab_var": result.slab_var,
                }
            ),
        )
        write_key_value(
            out / "oracle.txt",
            {
                "trait": trait_id,
                "tau": options["tau"],
                "sigma2": options["sigma2"],
                "prior": options["prior"],
                "log_evidence": result.log_evidence,
            },
        )
        self.success(
            f"Log evidence {result.log_evidence:.6f} for {trait_id}; results in {out}"
        )
