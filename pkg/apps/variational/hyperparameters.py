import logging
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from apps.core.config.keyvalue import KeyValueFile, write_key_value
from apps.core.exceptions import HyperparameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hyperparameters:
    """
    Prior settings and optimisation controls of the hierarchical model.

    ``n0``/``t0`` are unset by default, in which case the offset prior is
    moment-matched to ``e_active``/``v_active``; setting both pins the prior
    to the given mean and standard deviation.
    """

    e_active: float = 1.0
    v_active: float = 4.0
    tau_shape0: float = 0.01
    tau_rate0: float = 0.01
    sig_shape0: float = 0.01
    sig_rate0: float = 0.01
    anneal_T0: float = 2.0
    anneal_grid: int = 10
    tol: float = 0.01
    warmup_iters: int = 50
    max_iters: int = 5000
    afio_initial_gap: int = 16
    n0: Optional[float] = None
    t0: Optional[float] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        positive = (
            "e_active",
            "v_active",
            "tau_shape0",
            "tau_rate0",
            "sig_shape0",
            "sig_rate0",
            "tol",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise HyperparameterError(
                    f"{name} must be > 0, got {getattr(self, name)}",
                    params={"field": name},
                )
        if not self.anneal_T0 >= 1:
            raise HyperparameterError("anneal_T0 must be >= 1")
        if self.anneal_grid < 1:
            raise HyperparameterError("anneal_grid must be >= 1")
        if self.warmup_iters < 0 or self.max_iters < 1:
            raise HyperparameterError("warmup_iters must be >= 0 and max_iters >= 1")
        if self.afio_initial_gap < 1:
            raise HyperparameterError("afio_initial_gap must be >= 1")
        if self.anneals and self.anneal_grid > self.warmup_iters:
            raise HyperparameterError(
                f"anneal_grid ({self.anneal_grid}) must fit inside the warm-up "
                f"({self.warmup_iters} iterations)",
                code="annealing_outside_warmup",
            )
        if (self.n0 is None) != (self.t0 is None):
            raise HyperparameterError("n0 and t0 must be given together")
        if self.t0 is not None and not self.t0 > 0:
            raise HyperparameterError("t0 must be > 0")

    @property
    def anneals(self):
        return self.anneal_T0 > 1 and self.anneal_grid > 1

    @property
    def literal_zeta_prior(self):
        return self.n0 is not None

    # ------------------------------------------------------------------
    # key=value persistence
    # ------------------------------------------------------------------

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_config(cls, path, base=None):
        """Layer the keys of a key=value file over ``base`` (defaults if omitted)."""
        source = KeyValueFile(path, allowed_keys=cls.field_names())
        base = base or cls()
        values = {}
        for f in fields(cls):
            if f.name not in source:
                continue
            cast = _CASTS[f.name]
            raw = source.get(f.name)
            values[f.name] = None if raw == "" else cast(raw)
        logger.debug(f"Hyperparameters from {path}: {values}")
        return replace(base, **values)

    @classmethod
    def from_settings(cls):
        """Defaults with the project-level AFCAVI settings applied."""
        from apps.core.config.defaults import run_defaults

        return cls(
            tol=float(run_defaults.get("TOL")),
            max_iters=int(run_defaults.get("MAX_ITERS")),
            warmup_iters=int(run_defaults.get("WARMUP_ITERS")),
            afio_initial_gap=int(run_defaults.get("AFIO_INITIAL_GAP")),
        )

    def to_config(self, path):
        return write_key_value(path, asdict(self))


_CASTS = {
    "e_active": float,
    "v_active": float,
    "tau_shape0": float,
    "tau_rate0": float,
    "sig_shape0": float,
    "sig_rate0": float,
    "anneal_T0": float,
    "anneal_grid": int,
    "tol": float,
    "warmup_iters": int,
    "max_iters": int,
    "afio_initial_gap": int,
    "n0": float,
    "t0": float,
}
