from django.db import models
from django.utils import timezone


class RunStatus(models.TextChoices):
    RUNNING = "running", "Running"
    SUCCEEDED = "succeeded", "Succeeded"
    FAILED = "failed", "Failed"


class RunKind(models.TextChoices):
    FIT = "fit", "Single fit"
    PIPELINE = "pipeline", "Block pipeline"


class PipelineRun(models.Model):
    """
    One invocation of ``fit`` or ``pipeline`` from the command line.

    The row is created when the run starts and closed with its final status;
    the numerical outputs stay in ``out_dir``.
    """

    kind = models.CharField(max_length=16, choices=RunKind.choices)
    status = models.CharField(
        max_length=16, choices=RunStatus.choices, default=RunStatus.RUNNING
    )
    scheme = models.CharField(max_length=16)
    seed = models.PositiveIntegerField(default=0)
    config_path = models.CharField(max_length=500, blank=True)
    config_hash = models.CharField(max_length=64, blank=True)
    out_dir = models.CharField(max_length=500)
    error = models.TextField(blank=True)
    started_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)
    updated_at = models.DateTimeField(auto_now=True)

    def __str__(self):
        return f"{self.get_kind_display()} #{self.pk} ({self.scheme}, {self.status})"

    @property
    def wall_time(self):
        if self.finished_at is None:
            return None
        return (self.finished_at - self.started_at).total_seconds()

    def finish(self, status, error=""):
        self.status = status
        self.error = error
        self.finished_at = timezone.now()
        self.save(update_fields=["status", "error", "finished_at", "updated_at"])

    class Meta:
        ordering = ["-started_at"]


class BlockFit(models.Model):
    run = models.ForeignKey(
        PipelineRun, on_delete=models.CASCADE, related_name="blocks"
    )
    block_id = models.IntegerField()
    n_snps = models.PositiveIntegerField()
    n_traits = models.PositiveIntegerField()
    iterations = models.PositiveIntegerField()
    local_update_count = models.PositiveBigIntegerField()
    converged = models.BooleanField(default=False)
    final_elbo = models.FloatField(null=True, blank=True)
    wall_time_total = models.FloatField()
    wall_time_local = models.FloatField()
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"Block {self.block_id} of run #{self.run_id}"

    class Meta:
        unique_together = ("run", "block_id")
        ordering = ["run", "block_id"]
