import logging

from django.conf import settings

logger = logging.getLogger(__name__)


class RunDefaults:
    """
    Registry of project-wide numerical defaults.

    Values come from the ``AFCAVI`` settings dictionary when Django is
    configured and fall back to the built-in table otherwise, so library code
    running in worker processes never needs the settings module.
    """

    BUILTIN = {
        "TOL": 0.01,
        "MAX_ITERS": 5000,
        "WARMUP_ITERS": 50,
        "N_JOBS": 1,
        "AFIO_INITIAL_GAP": 16,
        "OUTPUT_DIR": "output",
        "SIGNAL_THRESHOLD": 0.5,
        "LOCUS_WINDOW_BP": 500000,
        "CIS_WINDOW_BP": 1000000,
    }

    def __init__(self):
        self._overrides = {}

    def get(self, name):
        if name in self._overrides:
            return self._overrides[name]
        if settings.configured:
            configured = getattr(settings, "AFCAVI", {})
            if name in configured:
                return configured[name]
        if name not in self.BUILTIN:
            raise KeyError(f"Unknown run default: {name}")
        return self.BUILTIN[name]

    def override(self, name, value):
        """Override a default for the current process."""
        if name not in self.BUILTIN:
            raise KeyError(f"Unknown run default: {name}")
        logger.info(f"Run default '{name}' overridden with {value!r}")
        self._overrides[name] = value

    def reset(self):
        self._overrides.clear()

    def as_dict(self):
        return {name: self.get(name) for name in self.BUILTIN}


# Create global instance
run_defaults = RunDefaults()
