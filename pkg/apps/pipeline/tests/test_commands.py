import io
import shutil
import tempfile
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from apps.core.config.keyvalue import write_key_value
from apps.engine.tests.helpers import small_hyper
from apps.pipeline.loci import LOCI_COLUMNS, load_loci
from apps.pipeline.models import PipelineRun, RunStatus
from apps.simulate.scenario import SimulationSpec


def run(name, *args, **options):
    stdout = io.StringIO()
    call_command(name, *args, stdout=stdout, stderr=io.StringIO(), **options)
    return stdout.getvalue()


class CommandFlowTests(TestCase):
    """simulate -> fit / pipeline -> report / evaluate, end to end on disk."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = Path(tempfile.mkdtemp())
        cls.sim = cls.tmp / "sim"
        SimulationSpec(
            n=120,
            p=10,
            q=6,
            a_p=0.2,
            a_q=0.5,
            h2m=0.4,
            bp_spacing=150_000,
            n_blocks=2,
        ).to_config(cls.tmp / "scenario.txt")
        small_hyper(max_iters=50).to_config(cls.tmp / "hyper.txt")
        run("simulate", config=cls.tmp / "scenario.txt", seed=5, out=cls.sim)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp, ignore_errors=True)
        super().tearDownClass()

    def inputs(self):
        return dict(
            genotypes=self.sim / "genotypes.tsv",
            responses=self.sim / "responses.tsv",
            snps=self.sim / "snps.tsv",
        )

    def test_simulation_files(self):
        names = ("genotypes", "responses", "snps", "traits", "blocks", "gamma_true")
        for name in names:
            self.assertTrue((self.sim / f"{name}.tsv").is_file())
        self.assertIn("seed=5", (self.sim / "scenario.txt").read_text().splitlines())

    def test_fit_is_recorded_and_reported(self):
        out = self.tmp / "fit"
        message = run(
            "fit",
            **self.inputs(),
            traits=self.sim / "traits.tsv",
            scheme="afio",
            config=self.tmp / "hyper.txt",
            out=out,
        )
        self.assertIn("afio fit", message)
        self.assertTrue((out / "ppi.tsv").is_file())
        fit_run = PipelineRun.objects.get()
        self.assertEqual((fit_run.kind, fit_run.status), ("fit", RunStatus.SUCCEEDED))
        self.assertEqual(fit_run.blocks.count(), 1)

        run("report", out, snps=self.sim / "snps.tsv", traits=self.sim / "traits.tsv")
        header = (out / "loci.tsv").read_text().splitlines()[0]
        self.assertEqual(header.split("\t"), LOCI_COLUMNS)

        listing = run("report", runs=5)
        self.assertIn(f"#{fit_run.pk}\tfit\tafio", listing)

    def test_fit_without_recording(self):
        run(
            "fit",
            **self.inputs(),
            config=self.tmp / "hyper.txt",
            out=self.tmp / "fit-quiet",
            no_record=True,
        )
        self.assertFalse(PipelineRun.objects.exists())

    def test_pipeline_and_report_agree(self):
        config = write_key_value(
            self.tmp / "pipeline.txt",
            {
                "genotypes": "sim/genotypes.tsv",
                "responses": "sim/responses.tsv",
                "snps": "sim/snps.tsv",
                "traits": "sim/traits.tsv",
                "blocks": "sim/blocks.tsv",
                "hyperparameters": "hyper.txt",
                "scheme": "afe",
                "out": "pipe",
            },
        )
        message = run("pipeline", config=config, seed=2)
        self.assertIn("from 2 blocks", message)
        pipe = self.tmp / "pipe"
        pipeline_run = PipelineRun.objects.get()
        self.assertEqual(pipeline_run.status, RunStatus.SUCCEEDED)
        self.assertEqual(pipeline_run.blocks.count(), 2)
        self.assertTrue((pipe / "manifest.txt").is_file())

        summary = load_loci(pipe / "loci.tsv")
        out = self.tmp / "re-report"
        run(
            "report",
            pipe,
            snps=self.sim / "snps.tsv",
            traits=self.sim / "traits.tsv",
            out=out,
        )
        self.assertEqual(load_loci(out / "loci.tsv"), summary)

    def test_missing_pipeline_config_names_the_stage(self):
        with self.assertRaisesMessage(CommandError, "[pipeline]"):
            run("pipeline", config=self.tmp / "absent.txt")

    def test_evaluate_score(self):
        out = self.tmp / "scored"
        run(
            "fit",
            **self.inputs(),
            config=self.tmp / "hyper.txt",
            out=out,
            no_record=True,
        )
        run(
            "evaluate",
            "score",
            ppi=out / "ppi.tsv",
            truth=self.sim / "gamma_true.tsv",
            snps=self.sim / "snps.tsv",
            out=out,
        )
        rows = (out / "scores.tsv").read_text().splitlines()
        self.assertEqual(len(rows), 4)

    def test_oracle_command(self):
        out = self.tmp / "oracle"
        run(
            "oracle",
            **self.inputs(),
            trait="prot1",
            tau=1.0,
            sigma2=0.5,
            prior=0.1,
            out=out,
        )
        lines = (out / "oracle.tsv").read_text().splitlines()
        self.assertEqual(len(lines), 11)
