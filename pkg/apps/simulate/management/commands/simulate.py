from dataclasses import replace
from pathlib import Path

from django.core.management.base import CommandError

from apps.core.exceptions import MetadataError
from apps.core.management.base import AfcaviCommand
from apps.data.io import load_matrix, load_snp_meta

from ...generator import simulate_dataset, write_simulation
from ...scenario import SimulationSpec

PRESETS = {
    "default": lambda seed, a_q: SimulationSpec(seed=seed),
    "toy": lambda seed, a_q: SimulationSpec.toy(seed=seed),
    "reference": lambda seed, a_q: SimulationSpec.reference(
        a_q=0.01 if a_q is None else a_q, seed=seed
    ),
}


class Command(AfcaviCommand):
    """
    Generate a synthetic multi-trait dataset with known associations.

    Usage:
        # Default scenario
        python manage.py simulate --out runs/sim

        # Sparse desk-scale benchmark scenario
        python manage.py simulate --preset reference --a-q 0.01 --seed 3

        # Scenario file, e.g. the scenario.txt of an earlier run
        python manage.py simulate --config runs/sim/scenario.txt

        # Responses on top of real genotypes
        python manage.py simulate --genotypes geno.tsv --snps snps.tsv

    Note:
        - --config values override the preset, --seed and --a-q override both
        - With --genotypes, n and p are taken from the genotype matrix
    """

    help = "Simulate genotypes, responses and the true association pattern"
    stage = "simulate"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--preset", choices=sorted(PRESETS), default="default")
        parser.add_argument(
            "--a-q", type=float, default=None, help="Fraction of active traits"
        )
        parser.add_argument(
            "--genotypes",
            type=Path,
            default=None,
            help="Genotype TSV (0/1/2) to simulate responses on",
        )
        parser.add_argument(
            "--snps", type=Path, default=None, help="SNP metadata for --genotypes"
        )

    def run(self, **options):
        seed = options["seed"] or 0
        spec = PRESETS[options["preset"]](seed, options["a_q"])
        if options["config"]:
            spec = SimulationSpec.from_config(options["config"], base=spec)
        overrides = {}
        if options["seed"] is not None:
            overrides["seed"] = options["seed"]
        if options["a_q"] is not None:
            overrides["a_q"] = options["a_q"]

        genotypes = snp_meta = None
        if options["genotypes"]:
            if not options["snps"]:
                raise CommandError("[simulate] --genotypes needs --snps")
            raw = load_matrix(options["genotypes"])
            by_id = {s.id: s for s in load_snp_meta(options["snps"])}
            if set(by_id) != set(raw.ids):
                raise MetadataError(
                    f"{options['snps']} does not describe the columns of "
                    f"{options['genotypes']}",
                    code="snp_mismatch",
                )
            genotypes = raw.values
            snp_meta = tuple(by_id[snp_id] for snp_id in raw.ids)
            overrides.update(n=genotypes.shape[0], p=genotypes.shape[1])
            overrides["n_blocks"] = min(spec.n_blocks, genotypes.shape[1])

        spec = replace(spec, **overrides)
        simulation = simulate_dataset(spec, genotypes=genotypes, snp_meta=snp_meta)
        write_simulation(simulation, options["out"])

        truth = simulation.truth
        self.success(
            f"Simulated n={spec.n}, p={spec.p}, q={spec.q} with "
            f"{int(truth.gamma_true.sum())} true associations; files in "
            f"{options['out']}"
        )
