"""
Simulation scenarios.

A scenario fixes the dimensions, sparsity and heritability of a simulated
dataset and every distribution parameter of the generator, so a scenario
file plus its seed reproduces a dataset exactly.
"""

import logging
from dataclasses import asdict, dataclass, fields, replace

from decouple import Csv

from apps.core.config.keyvalue import KeyValueFile, write_key_value
from apps.core.exceptions import InfeasibleSpecError
from apps.core.utils import round_half_up

logger = logging.getLogger(__name__)


def active_count(fraction, total):
    """round_half_up(fraction·total), at least 1 when the fraction is positive."""
    if fraction <= 0:
        return 0
    return min(total, max(1, round_half_up(fraction * total)))


@dataclass(frozen=True)
class SimulationSpec:
    n: int = 500
    p: int = 100
    q: int = 50
    a_p: float = 0.05
    a_q: float = 0.1
    h2m: float = 0.15
    noise_block_size: int = 10
    noise_rho_max: float = 0.5
    propensity_beta: tuple = (1.0, 5.0)
    persnp_beta: tuple = (2.0, 5.0)
    maf_range: tuple = (0.05, 0.5)
    random_signs: bool = False
    bp_spacing: int = 1000
    n_blocks: int = 1
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if min(self.n, self.p, self.q) < 1:
            raise InfeasibleSpecError("n, p and q must be positive integers")
        for name in ("a_p", "a_q"):
            if not 0 <= getattr(self, name) <= 1:
                raise InfeasibleSpecError(
                    f"{name} must lie in [0, 1]", params={"field": name}
                )
        if (self.a_p == 0) != (self.a_q == 0):
            raise InfeasibleSpecError(
                "a_p and a_q must be both zero or both positive",
                params={"a_p": self.a_p, "a_q": self.a_q},
            )
        if not 0 < self.h2m < 1:
            raise InfeasibleSpecError("h2m must lie in (0, 1)")
        if self.noise_block_size < 1:
            raise InfeasibleSpecError("noise_block_size must be >= 1")
        if not 0 <= self.noise_rho_max < 1:
            raise InfeasibleSpecError("noise_rho_max must lie in [0, 1)")
        low, high = self.maf_range
        if not 0 < low <= high <= 0.5:
            raise InfeasibleSpecError("maf_range must lie within (0, 0.5]")
        if self.bp_spacing < 1 or not 1 <= self.n_blocks <= self.p:
            raise InfeasibleSpecError("bp_spacing must be >= 1 and n_blocks in [1, p]")
        if self.seed < 0:
            raise InfeasibleSpecError("seed must be non-negative")

    @property
    def h2t_beta(self):
        """Beta shapes whose mean is h2m."""
        return 1.0, (1.0 - self.h2m) / self.h2m

    @property
    def n_active_snps(self):
        return active_count(self.a_p, self.p)

    @property
    def n_active_traits(self):
        return active_count(self.a_q, self.q)

    # ------------------------------------------------------------------
    # presets
    # ------------------------------------------------------------------

    @classmethod
    def toy(cls, seed=0):
        """One hotspot SNP of 200 acting on 200 of 1000 traits with weak effects."""
        return cls(
            n=2000, p=200, q=1000, a_p=1 / 200, a_q=0.2, h2m=0.01, seed=seed
        )

    @classmethod
    def reference(cls, a_q=0.01, seed=0):
        """Desk-scale version of the sparse and dense benchmark scenarios."""
        return cls(n=2000, p=300, q=500, a_p=0.01, a_q=a_q, h2m=0.15, seed=seed)

    # ------------------------------------------------------------------
    # key=value persistence
    # ------------------------------------------------------------------

    @classmethod
    def from_config(cls, path, base=None):
        source = KeyValueFile(path, allowed_keys=[f.name for f in fields(cls)])
        values = {}
        for f in fields(cls):
            if f.name in source:
                values[f.name] = source.get(f.name, cast=_CASTS[f.name])
        logger.debug(f"Scenario from {path}: {values}")
        return replace(base or cls(), **values)

    def to_config(self, path):
        return write_key_value(path, asdict(self))


_float_pair = Csv(cast=float, post_process=tuple)

_CASTS = {
    "n": int,
    "p": int,
    "q": int,
    "a_p": float,
    "a_q": float,
    "h2m": float,
    "noise_block_size": int,
    "noise_rho_max": float,
    "propensity_beta": _float_pair,
    "persnp_beta": _float_pair,
    "maf_range": _float_pair,
    "random_signs": bool,
    "bp_spacing": int,
    "n_blocks": int,
    "seed": int,
}
