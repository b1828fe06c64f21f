import logging

from django.db.models.signals import post_save
from django.dispatch import receiver
from termcolor import colored

from .models import PipelineRun, RunStatus

logger = logging.getLogger(__name__)

STATUS_COLORS = {
    RunStatus.RUNNING: "cyan",
    RunStatus.SUCCEEDED: "green",
    RunStatus.FAILED: "red",
}


@receiver(post_save, sender=PipelineRun)
def log_run_status(sender, instance, created, **kwargs):
    """Log every status change of a recorded run."""
    color = STATUS_COLORS.get(instance.status, "cyan")
    if instance.status == RunStatus.FAILED:
        logger.error(colored(f"{instance} failed: {instance.error}", color))
    elif created:
        logger.info(colored(f"Recording {instance} in {instance.out_dir}", color))
    else:
        logger.info(colored(f"{instance} finished", color))
