from pathlib import Path

import numpy as np
from django.core.management.base import CommandError

from apps.core.config.defaults import run_defaults
from apps.core.management.base import AfcaviCommand
from apps.data.io import load_labeled_matrix, load_snp_meta, load_trait_meta

from ...loci import summarize_loci, write_loci
from ...models import PipelineRun


class Command(AfcaviCommand):
    """
    Locus report of an existing fit or pipeline output directory.

    Usage:
        # Re-summarize a pipeline run with a stricter threshold
        python manage.py report runs/chr1 --snps snps.tsv --threshold 0.9

        # Chained merging with cis/trans labels
        python manage.py report runs/fit --snps snps.tsv --traits traits.tsv \\
            --chained

        # The ten most recent recorded runs
        python manage.py report --runs 10

    Note:
        - A pipeline directory is read block by block from blocks/block_*/
        - loci.tsv is written to --out, or to the source directory
    """

    help = "Rebuild loci.tsv from fitted PPIs or list recorded runs"
    stage = "report"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("source", type=Path, nargs="?", default=None)
        parser.add_argument("--snps", type=Path, default=None)
        parser.add_argument("--traits", type=Path, default=None)
        parser.add_argument("--threshold", type=float, default=None)
        parser.add_argument("--window-bp", type=int, default=None)
        parser.add_argument("--cis-window-bp", type=int, default=None)
        parser.add_argument("--chained", action="store_true")
        parser.add_argument(
            "--runs", type=int, default=None, help="List the N latest recorded runs"
        )

    def run(self, **options):
        if options["runs"] is not None:
            return self.list_runs(options["runs"])
        if options["source"] is None or options["snps"] is None:
            raise CommandError("[report] a source directory and --snps are required")

        ppi, beta, snp_ids, trait_ids = self.read_fit(options["source"])
        by_id = {record.id: record for record in load_snp_meta(options["snps"])}
        missing = [snp_id for snp_id in snp_ids if snp_id not in by_id]
        if missing:
            raise CommandError(f"[report] no metadata for SNP {missing[0]}")
        trait_meta = None
        if options["traits"]:
            trait_meta = load_trait_meta(options["traits"])
            if [t.id for t in trait_meta] != trait_ids:
                raise CommandError("[report] trait metadata does not match the fit")

        loci = summarize_loci(
            ppi,
            beta,
            [by_id[snp_id] for snp_id in snp_ids],
            trait_ids=trait_ids,
            threshold=options["threshold"] or run_defaults.get("SIGNAL_THRESHOLD"),
            window_bp=options["window_bp"] or run_defaults.get("LOCUS_WINDOW_BP"),
            chained=options["chained"],
            trait_meta=trait_meta,
            cis_window=options["cis_window_bp"] or run_defaults.get("CIS_WINDOW_BP"),
        )
        out = options["out"] if options["out_given"] else options["source"]
        write_loci(out / "loci.tsv", loci)

        for locus in loci:
            traits = ", ".join(a.trait_id for a in locus.associations)
            self.stdout.write(
                f"{locus.locus_id}\t{locus.start_bp}-{locus.end_bp}\t"
                f"{locus.lead_snp}\t{traits}"
            )
        self.success(f"{len(loci)} loci written to {out / 'loci.tsv'}")

    def read_fit(self, source):
        blocks = sorted(
            (source / "blocks").glob("block_*"),
            key=lambda path: int(path.name.removeprefix("block_")),
        )
        folders = blocks or [source]
        if not (folders[0] / "ppi.tsv").is_file():
            raise CommandError(f"[report] no ppi.tsv under {source}")
        ppi, beta, snp_ids, trait_ids = [], [], [], None
        for folder in folders:
            values, ids, traits = load_labeled_matrix(folder / "ppi.tsv")
            effects, _, _ = load_labeled_matrix(folder / "beta.tsv")
            traits = list(traits)
            if trait_ids is not None and traits != trait_ids:
                raise CommandError(f"[report] trait columns differ in {folder}")
            trait_ids = traits
            ppi.append(values)
            beta.append(effects)
            snp_ids.extend(ids)
        return np.vstack(ppi), np.vstack(beta), snp_ids, trait_ids

    def list_runs(self, count):
        runs = PipelineRun.objects.all()[:count]
        if not runs:
            self.stdout.write("No recorded runs")
            return
        for run in runs:
            blocks = run.blocks.count()
            wall = f"{run.wall_time:.1f}s" if run.wall_time is not None else "-"
            self.stdout.write(
                f"#{run.pk}\t{run.kind}\t{run.scheme}\tseed={run.seed}\t"
                f"{run.status}\t{blocks} blocks\t{wall}\t{run.out_dir}"
            )
