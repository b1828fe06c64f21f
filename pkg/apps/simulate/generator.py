"""
Synthetic multi-trait QTL data.

Responses are generated as y_t = Σ_s β_st X_s + ε_t in three steps: a sparse
association pattern with hotspot propensities, block-equicorrelated noise,
and effect sizes calibrated to a per-trait heritability. Each step draws
from its own random stream derived from the scenario seed.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from apps.core.exceptions import (
    DegenerateHeritabilityError,
    DimensionMismatchError,
    InfeasibleSpecError,
)
from apps.core.tsv import read_table, write_table
from apps.data.dataset import Block, BlockTable, SnpRecord, TraitRecord
from apps.data.io import (
    load_labeled_matrix,
    write_blocks,
    write_matrix,
    write_snp_meta,
    write_trait_meta,
)

from .scenario import active_count

logger = logging.getLogger(__name__)

MAX_HERITABILITY_DRAWS = 100
MAX_GENOTYPE_REDRAWS = 1000
HERITABILITY_CEILING = 1.0 - 1e-9
GENE_MARGIN_BP = 2_000_000

STREAMS = ("genotypes", "pattern", "noise", "effects", "metadata")


@dataclass(frozen=True)
class SimTruth:
    gamma_true: np.ndarray
    beta_true: np.ndarray
    h2_t: np.ndarray
    h2_st: np.ndarray
    eta_b: np.ndarray


@dataclass(frozen=True)
class Simulation:
    genotypes: np.ndarray
    Y: np.ndarray
    snp_meta: tuple
    trait_meta: tuple
    blocks: BlockTable
    truth: SimTruth
    spec: object


def scenario_streams(seed):
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


# ============================================================================
# ASSOCIATION PATTERN
# ============================================================================


def draw_propensities(count, spec, rng):
    return rng.beta(*spec.propensity_beta, size=count)


def assign_association_pattern(spec, rng, p=None, q=None):
    """
    Boolean p by q matrix of true associations.

    Active SNPs and traits are drawn uniformly; each active pair is linked
    with the SNP's propensity. A repair pass then gives every active SNP
    without a link one uniformly chosen active trait, and afterwards every
    active trait without a link one uniformly chosen active SNP.
    """
    p = spec.p if p is None else p
    q = spec.q if q is None else q
    n_snps = spec.n_active_snps if p == spec.p else active_count(spec.a_p, p)
    n_traits = spec.n_active_traits
    gamma = np.zeros((p, q), dtype=bool)
    if n_snps == 0 and n_traits == 0:
        return gamma
    if n_snps == 0 or n_traits == 0:
        raise InfeasibleSpecError(
            "Active traits need at least one active SNP and vice versa",
            params={"a_p": spec.a_p, "a_q": spec.a_q},
        )

    snps = np.sort(rng.choice(p, size=n_snps, replace=False))
    traits = np.sort(rng.choice(q, size=n_traits, replace=False))
    omega = draw_propensities(n_snps, spec, rng)
    links = rng.random((n_snps, n_traits)) < omega[:, None]

    for i in np.flatnonzero(~links.any(axis=1)):
        links[i, rng.integers(n_traits)] = True
    for j in np.flatnonzero(~links.any(axis=0)):
        links[rng.integers(n_snps), j] = True

    gamma[np.ix_(snps, traits)] = links
    logger.debug(
        f"Pattern: {n_snps} active SNPs, {n_traits} active traits, "
        f"{int(links.sum())} links"
    )
    return gamma


# ============================================================================
# NOISE
# ============================================================================


def equicorrelated_noise(n, block_sizes, eta, rng):
    """Unit-variance Gaussian noise, correlation eta[b] inside block b."""
    columns = []
    for size, rho in zip(block_sizes, eta):
        if not -1.0 / max(size - 1, 1) < rho < 1.0:
            raise InfeasibleSpecError(f"Correlation {rho} is not positive definite")
        corr = np.full((size, size), rho)
        np.fill_diagonal(corr, 1.0)
        lower = np.linalg.cholesky(corr)
        columns.append(rng.standard_normal((n, size)) @ lower.T)
    return np.hstack(columns)


def noise_block_sizes(q, block_size):
    full, rest = divmod(q, block_size)
    return [block_size] * full + ([rest] if rest else [])


def simulate_correlated_noise(spec, rng, n=None):
    """Return (E, eta_b): n by q noise and the correlation of each trait block."""
    n = spec.n if n is None else n
    sizes = noise_block_sizes(spec.q, spec.noise_block_size)
    eta = rng.uniform(0.0, spec.noise_rho_max, size=len(sizes))
    return equicorrelated_noise(n, sizes, eta, rng), eta


# ============================================================================
# EFFECT SIZES
# ============================================================================


def effect_size(h2_st, h2_t, noise_var, maf):
    """Per-allele effect giving SNP-level heritability h2_st within a trait at h2_t."""
    return np.sqrt(h2_st / (1.0 - h2_t) * noise_var / (2.0 * maf * (1.0 - maf)))


def draw_heritability(spec, rng):
    for _ in range(MAX_HERITABILITY_DRAWS):
        h2 = rng.beta(*spec.h2t_beta)
        if h2 < HERITABILITY_CEILING:
            return float(h2)
    raise DegenerateHeritabilityError(
        f"Trait heritability stayed above {HERITABILITY_CEILING} for "
        f"{MAX_HERITABILITY_DRAWS} draws (h2m={spec.h2m})"
    )


def simulate_effect_sizes(gamma_true, spec, maf, noise_var, rng):
    """Return (beta_true, h2_t, h2_st) for the links in ``gamma_true``."""
    gamma_true = np.asarray(gamma_true, dtype=bool)
    maf = np.asarray(maf, dtype=float)
    noise_var = np.broadcast_to(
        np.asarray(noise_var, dtype=float), gamma_true.shape[1:]
    )
    p, q = gamma_true.shape
    beta = np.zeros((p, q))
    h2_t = np.zeros(q)
    h2_st = np.zeros((p, q))

    for t in np.flatnonzero(gamma_true.any(axis=0)):
        rows = np.flatnonzero(gamma_true[:, t])
        h2_t[t] = draw_heritability(spec, rng)
        raw = rng.beta(*spec.persnp_beta, size=rows.size)
        h2_st[rows, t] = raw / raw.sum() * h2_t[t]
        beta[rows, t] = effect_size(h2_st[rows, t], h2_t[t], noise_var[t], maf[rows])

    if spec.random_signs:
        links = np.flatnonzero(gamma_true.ravel())
        signs = rng.choice([-1.0, 1.0], size=links.size)
        beta.ravel()[links] *= signs
    return beta, h2_t, h2_st


def simulate_responses(genotypes, beta_true, noise):
    genotypes = np.asarray(genotypes, dtype=float)
    if genotypes.shape[1] != beta_true.shape[0] or noise.shape != (
        genotypes.shape[0],
        beta_true.shape[1],
    ):
        raise DimensionMismatchError(
            f"Genotypes {genotypes.shape}, effects {beta_true.shape} and noise "
            f"{noise.shape} do not line up"
        )
    return genotypes @ beta_true + noise


# ============================================================================
# GENOTYPES
# ============================================================================


def simulate_genotypes(n, p, maf_range, rng):
    """
    Independent Hardy-Weinberg genotypes with allele frequencies uniform on
    ``maf_range``. Monomorphic columns are redrawn. Returns (genotypes, freqs).
    """
    low, high = maf_range
    freqs = rng.uniform(low, high, size=p)
    genotypes = rng.binomial(2, freqs, size=(n, p)).astype(float)
    for _ in range(MAX_GENOTYPE_REDRAWS):
        constant = np.flatnonzero(np.ptp(genotypes, axis=0) == 0)
        if constant.size == 0:
            return genotypes, freqs
        for s in constant:
            genotypes[:, s] = rng.binomial(2, freqs[s], size=n)
    raise InfeasibleSpecError(
        f"Could not draw polymorphic genotypes for n={n} with maf_range={maf_range}"
    )


# ============================================================================
# FULL SCENARIO
# ============================================================================


def even_blocks(bp, n_blocks):
    """Split the sorted positions into ``n_blocks`` runs of near-equal SNP count."""
    bp = np.asarray(bp)
    chunks = np.array_split(np.arange(bp.size), n_blocks)
    return BlockTable.from_blocks(
        [
            Block(block_id=b + 1, start_bp=int(bp[c[0]]), end_bp=int(bp[c[-1]]))
            for b, c in enumerate(chunks)
        ]
    )


def simulate_dataset(spec, genotypes=None, snp_meta=None):
    """
    Simulate a full dataset for ``spec``. With ``genotypes`` (and matching
    ``snp_meta`` carrying allele frequencies) the responses are synthesised
    on top of the given genotype matrix; n and p then come from it.
    """
    streams = scenario_streams(spec.seed)
    if genotypes is None:
        genotypes, freqs = simulate_genotypes(
            spec.n, spec.p, spec.maf_range, streams["genotypes"]
        )
        maf = np.minimum(freqs, 1.0 - freqs)
        snp_meta = tuple(
            SnpRecord(
                id=f"rs{s + 1}", bp=(s + 1) * spec.bp_spacing, maf=float(maf[s])
            )
            for s in range(spec.p)
        )
    else:
        genotypes = np.asarray(genotypes, dtype=float)
        if snp_meta is None or len(snp_meta) != genotypes.shape[1]:
            raise DimensionMismatchError(
                "Supplied genotypes need SNP metadata with one record per column"
            )
        maf = np.array([s.maf for s in snp_meta])
    n, p = genotypes.shape
    q = spec.q

    gamma = assign_association_pattern(spec, streams["pattern"], p=p, q=q)
    noise, eta = simulate_correlated_noise(spec, streams["noise"], n=n)
    beta, h2_t, h2_st = simulate_effect_sizes(
        gamma, spec, maf, np.ones(q), streams["effects"]
    )
    Y = simulate_responses(genotypes, beta, noise)

    bp = np.array([s.bp for s in snp_meta])
    gene_bp = streams["metadata"].integers(
        max(1, bp.min() - GENE_MARGIN_BP), bp.max() + GENE_MARGIN_BP, size=q
    )
    trait_meta = tuple(
        TraitRecord(id=f"prot{t + 1}", gene_bp=int(gene_bp[t])) for t in range(q)
    )
    logger.info(
        f"Simulated n={n}, p={p}, q={q}: {int(gamma.any(axis=1).sum())} active SNPs, "
        f"{int(gamma.any(axis=0).sum())} active traits"
    )
    return Simulation(
        genotypes=genotypes,
        Y=Y,
        snp_meta=tuple(snp_meta),
        trait_meta=trait_meta,
        blocks=even_blocks(np.sort(bp), min(spec.n_blocks, p)),
        truth=SimTruth(
            gamma_true=gamma, beta_true=beta, h2_t=h2_t, h2_st=h2_st, eta_b=eta
        ),
        spec=spec,
    )


# ============================================================================
# FILES
# ============================================================================


def write_simulation(simulation, out_dir):
    """
    Write the dataset in the data module's TSV formats, the truth files and
    ``scenario.txt``, which reproduces the run through ``simulate --config``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    snp_ids = [s.id for s in simulation.snp_meta]
    trait_ids = [t.id for t in simulation.trait_meta]
    truth = simulation.truth

    write_matrix(out_dir / "genotypes.tsv", simulation.genotypes, snp_ids)
    write_matrix(out_dir / "responses.tsv", simulation.Y, trait_ids)
    write_snp_meta(out_dir / "snps.tsv", simulation.snp_meta)
    write_trait_meta(out_dir / "traits.tsv", simulation.trait_meta)
    write_blocks(out_dir / "blocks.tsv", simulation.blocks)
    write_matrix(
        out_dir / "gamma_true.tsv",
        truth.gamma_true.astype(int),
        trait_ids,
        snp_ids,
        "snp_id",
    )
    write_matrix(
        out_dir / "beta_true.tsv", truth.beta_true, trait_ids, snp_ids, "snp_id"
    )
    write_table(
        out_dir / "h2.tsv",
        pd.DataFrame({"trait_id": trait_ids, "h2": truth.h2_t}),
    )
    simulation.spec.to_config(out_dir / "scenario.txt")
    logger.info(f"Simulation written to {out_dir}")
    return out_dir


def load_truth(out_dir):
    """Read gamma_true.tsv, beta_true.tsv and h2.tsv back into a SimTruth."""
    out_dir = Path(out_dir)
    gamma, _, _ = load_labeled_matrix(out_dir / "gamma_true.tsv")
    beta, _, _ = load_labeled_matrix(out_dir / "beta_true.tsv")
    h2 = read_table(out_dir / "h2.tsv")["h2"].astype(float).to_numpy()
    return SimTruth(
        gamma_true=gamma.astype(bool),
        beta_true=beta,
        h2_t=h2,
        h2_st=np.full(beta.shape, np.nan),
        eta_b=np.array([]),
    )
