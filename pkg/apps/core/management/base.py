import logging
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from ..config.defaults import run_defaults
from ..exceptions import BlockFailure, NumericalFailure

logger = logging.getLogger(__name__)


class AfcaviCommand(BaseCommand):
    """
    Base for the analysis commands.

    Adds the ``--seed``, ``--config`` and ``--out`` options every command
    accepts and turns domain errors into ``CommandError`` naming the stage
    that failed.
    """

    stage = "command"
    config_required = False

    def add_arguments(self, parser):
        parser.add_argument(
            "--seed", type=int, default=None, help="Seed for all random streams"
        )
        parser.add_argument(
            "--config",
            type=Path,
            default=None,
            required=self.config_required,
            help="key=value configuration file",
        )
        parser.add_argument(
            "--out",
            type=Path,
            default=None,
            help="Output directory (default: AFCAVI OUTPUT_DIR setting)",
        )

    def handle(self, *args, **options):
        options["out_given"] = options["out"] is not None
        options["out"] = Path(options["out"] or run_defaults.get("OUTPUT_DIR"))
        try:
            return self.run(**options)
        except CommandError:
            raise
        except ValidationError as e:
            raise CommandError(f"[{self.stage}] {'; '.join(e.messages)}")
        except (NumericalFailure, BlockFailure, OSError) as e:
            raise CommandError(f"[{self.stage}] {e}")

    def run(self, **options):
        raise NotImplementedError("Subclasses must implement run()")

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))
