import numpy as np

from apps.core.exceptions import DosageError

SIMPLEX_TOLERANCE = 1e-6


def dosage_to_genotype(p0, p1, p2):
    """
    Expected genotype on the 0-2 scale from genotype probabilities.

    Accepts scalars or equally shaped arrays; returns ``p1 + 2 * p2``.
    """
    probs = np.stack(np.broadcast_arrays(p0, p1, p2)).astype(float)
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise DosageError("Genotype probabilities must be finite and non-negative")
    total = probs.sum(axis=0)
    off = np.abs(total - 1.0) > SIMPLEX_TOLERANCE
    if np.any(off):
        worst = float(np.max(np.abs(np.ravel(total) - 1.0)))
        raise DosageError(
            f"Genotype probabilities deviate from a unit sum by {worst:.3g}",
            code="not_on_simplex",
        )
    genotype = probs[1] + 2.0 * probs[2]
    return float(genotype) if genotype.ndim == 0 else genotype
