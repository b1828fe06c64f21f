import hashlib
from pathlib import Path

import numpy as np


def round_half_up(x):
    """Round to the nearest integer with halves going up (2.5 -> 3)."""
    return int(np.floor(x + 0.5))


def spawn_generators(seed, count):
    """``count`` independent generators derived from one seed, in a fixed order."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def derived_seed(seed, index):
    """A non-negative integer seed for job ``index`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def file_sha256(path):
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
