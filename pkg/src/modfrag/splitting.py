"""Stochastic demand-split samplers.

Reproducibility contract: every sample is drawn from a counter-based
Philox4x64 generator keyed as (master_seed, trial_index). Given the same
(spec, demand, theta, key), the sample is bit-identical regardless of how
trials are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import DemandMatrix, NetFlowVector, ValidationError, net_flow, scale_demand

BINOMIAL = "binomial"
POISSON = "poisson"


def share_matrices(shares, n, firms=2):
    """Normalize a share argument to per-firm per-edge matrices summing to 1.

    Accepts a scalar rho (two firms: rho and 1-rho), a list of per-firm
    scalars, a single per-edge matrix (two firms), or a list of per-firm
    per-edge matrices. Returns (matrices, homogeneous_flag).
    """
    if np.isscalar(shares):
        rho = float(shares)
        if not 0.0 <= rho <= 1.0:
            raise ValidationError(f"share must lie in [0, 1], got {rho}")
        if firms != 2:
            raise ValidationError("scalar share only defines a two-firm split")
        return [np.full((n, n), rho), np.full((n, n), 1.0 - rho)], True
    shares_list = list(shares) if isinstance(shares, (list, tuple)) else None
    if shares_list is not None and all(np.isscalar(s) for s in shares_list):
        vals = [float(s) for s in shares_list]
        if any(not 0.0 <= s <= 1.0 for s in vals):
            raise ValidationError("firm shares must lie in [0, 1]")
        if abs(sum(vals) - 1.0) > 1e-12:
            raise ValidationError(f"firm shares must sum to 1, got {sum(vals)}")
        return [np.full((n, n), s) for s in vals], True
    if shares_list is not None and np.asarray(shares_list[0]).ndim == 2:
        mats = [np.asarray(m, dtype=float) for m in shares_list]
    else:
        m = np.asarray(shares, dtype=float)
        if m.shape != (n, n):
            raise ValidationError(
                f"per-edge shares must have shape ({n}, {n}), got {m.shape}")
        mats = [m, 1.0 - m]
    for m in mats:
        if m.shape != (n, n):
            raise ValidationError(
                f"per-edge shares must have shape ({n}, {n}), got {m.shape}")
        if np.any(m < -1e-12) or np.any(m > 1 + 1e-12):
            raise ValidationError("per-edge shares must lie in [0, 1]")
    off_diag = ~np.eye(n, dtype=bool)
    total = sum(mats)
    if not np.allclose(total[off_diag], 1.0, rtol=0, atol=1e-12):
        raise ValidationError("per-edge firm shares must sum to 1 on every edge")
    homogeneous = all(
        np.allclose(m[off_diag], m[off_diag].flat[0], rtol=0, atol=1e-12)
        for m in mats)
    return mats, homogeneous


@dataclass(frozen=True)
class SplitSpec:
    """How demand is split among firms.

    family: "binomial" partitions the (scaled) monopolist counts exactly
    (multinomial per edge); "poisson" draws each firm's counts independently
    with the share-weighted means, so the firm totals need not add up to a
    pre-declared aggregate.
    """

    family: str = BINOMIAL
    shares: object = 0.5
    firms: int = 2

    def __post_init__(self):
        if self.family not in (BINOMIAL, POISSON):
            raise ValidationError(
                f"unknown split family {self.family!r}; "
                f"expected {BINOMIAL!r} or {POISSON!r}")
        if self.firms < 2:
            raise ValidationError(f"need at least 2 firms, got {self.firms}")

    def matrices(self, n):
        return share_matrices(self.shares, n, firms=self.firms)


@dataclass(frozen=True)
class SplitSample:
    """One realization of the split: per-firm demand matrices plus the
    rescaled fluctuation Z = (firm_a - theta * rho * Lambda) / sqrt(theta)."""

    firms: tuple            # tuple of DemandMatrix
    theta: int
    fluctuation: np.ndarray

    @property
    def realized_total(self) -> np.ndarray:
        return sum(f.counts for f in self.firms)


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Philox generator keyed with (master_seed, trial_index)."""
    key = (int(master_seed) & (2**64 - 1)) | (int(trial_index) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_split(demand: DemandMatrix, spec: SplitSpec, theta: int,
                 seed) -> SplitSample:
    """Draw one split of theta-scaled demand among the firms.

    ``seed`` may be an integer master seed or an existing numpy Generator
    (as produced by trial_rng).
    """
    if int(theta) != theta or theta < 1:
        raise ValidationError(f"theta must be a positive integer, got {theta}")
    theta = int(theta)
    rng = seed if isinstance(seed, np.random.Generator) else trial_rng(seed, 0)
    mats, _ = spec.matrices(demand.n)
    scaled = scale_demand(demand, theta).counts

    if spec.family == BINOMIAL:
        remaining = scaled.copy()
        remaining_share = np.ones_like(mats[0])
        firm_counts = []
        for m in mats[:-1]:
            with np.errstate(divide="ignore", invalid="ignore"):
                p = np.where(remaining_share > 0, m / remaining_share, 0.0)
            p = np.clip(p, 0.0, 1.0)
            draw = rng.binomial(remaining, p)
            firm_counts.append(draw)
            remaining = remaining - draw
            remaining_share = remaining_share - m
        firm_counts.append(remaining)  # exact partition by construction
    else:
        firm_counts = [rng.poisson(theta * m * demand.counts) for m in mats]

    firms = tuple(DemandMatrix(counts=c) for c in firm_counts)
    z = (firm_counts[0].astype(float)
         - theta * mats[0] * demand.counts) / np.sqrt(theta)
    return SplitSample(firms=firms, theta=theta, fluctuation=z)


def expected_split(demand: DemandMatrix, spec: SplitSpec, theta: int):
    """Per-firm expected net-flow vectors net(theta * rho_k * Lambda)."""
    mats, _ = spec.matrices(demand.n)
    return [net_flow(theta * m * demand.counts.astype(float)) for m in mats]
