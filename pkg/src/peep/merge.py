"""Mergeable sufficient statistics for distributed eigenface fitting.

A partition is summarized by (count m, mean vector, co-moment matrix
``sum (x - mean)(x - mean)^T``). Two summaries merge exactly:

    C = C_a + C_b + outer(mean_a - mean_b) * m_a * m_b / (m_a + m_b)

so folding partition summaries reproduces the batch mean and covariance to
rounding error, whatever the partition sizes. ``sample_covariance`` divides by
(m - 1); the eigenface path rescales to its 1/n convention before
decomposing.

``prenormalized_merge_covariance`` implements a commonly miswritten variant
that divides each co-moment by its own (m - 1) inside the merge; it disagrees
with the batch covariance whenever partition sizes differ and exists only so
that the discrepancy can be demonstrated. The pipeline never uses it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, DimensionMismatch, EmptyInput, EmptyPartition
from .validation import as_matrix


@dataclass(frozen=True)
class PartitionStats:
    """Count, mean, and co-moment matrix of one data partition."""

    count: int
    mean: np.ndarray  # (d,)
    comoment: np.ndarray  # (d, d), symmetric, PSD up to rounding

    def __post_init__(self):
        if self.count < 1:
            raise EmptyPartition(f"count must be >= 1, got {self.count}")
        d = self.mean.shape[0]
        if self.comoment.shape != (d, d):
            raise DimensionMismatch(
                f"comoment shape {self.comoment.shape} does not match mean length {d}"
            )
        if np.max(np.abs(self.comoment - self.comoment.T)) > 1e-9:
            raise DataError("comoment is not symmetric within 1e-9")
        if np.diag(self.comoment).min() < -1e-9:
            raise DataError("comoment has a negative diagonal entry")

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    def sample_covariance(self) -> np.ndarray:
        """Co-moment under the (m - 1) sample convention."""
        if self.count < 2:
            raise DataError("sample covariance needs count >= 2")
        return self.comoment / (self.count - 1)


def compute_partition_stats(vectors) -> PartitionStats:
    """Exact two-pass mean and co-moment of a nonempty vector list."""
    try:
        X = as_matrix(vectors, "vectors")
    except EmptyInput:
        raise EmptyPartition("partition holds no vectors") from None
    mean = X.mean(axis=0)
    D = X - mean
    C = D.T @ D
    return PartitionStats(count=X.shape[0], mean=mean, comoment=(C + C.T) / 2.0)


def merge_means(parts) -> np.ndarray:
    """Count-weighted mean of (count, mean) pairs."""
    if not parts:
        raise EmptyPartition("no parts to merge")
    d = np.asarray(parts[0][1]).shape[0]
    total = 0
    acc = np.zeros(d)
    for count, mean in parts:
        mean = np.asarray(mean, dtype=np.float64)
        if mean.shape != (d,):
            raise DimensionMismatch(f"mean of length {mean.shape} != ({d},)")
        if count < 1:
            raise EmptyPartition("part with count < 1")
        acc += count * mean
        total += count
    return acc / total


def merge_stats(a: PartitionStats, b: PartitionStats) -> PartitionStats:
    """Merge two partition summaries; equals the concatenated-data summary."""
    if a.d != b.d:
        raise DimensionMismatch(f"dimension mismatch: {a.d} vs {b.d}")
    m = a.count + b.count
    mean = (a.count * a.mean + b.count * b.mean) / m
    gap = a.mean - b.mean
    C = a.comoment + b.comoment + np.outer(gap, gap) * (a.count * b.count / m)
    return PartitionStats(count=m, mean=mean, comoment=(C + C.T) / 2.0)


def prenormalized_merge_covariance(a: PartitionStats, b: PartitionStats) -> np.ndarray:
    """Update rule with per-partition (m - 1) divisors applied inside the merge.

    Undefined for singleton partitions; inconsistent with the true merged
    sample covariance when partition sizes differ. For comparison only.
    """
    if a.d != b.d:
        raise DimensionMismatch(f"dimension mismatch: {a.d} vs {b.d}")
    if a.count < 2 or b.count < 2:
        raise DataError("the prenormalized rule divides by (m - 1); needs counts >= 2")
    m = a.count + b.count
    gap_u = a.mean - b.mean
    inner = (
        a.comoment / (a.count - 1)
        + b.comoment / (b.count - 1)
        + np.outer(gap_u, gap_u) * (a.count * b.count / m)
    )
    return inner / (m - 1)


def merged_sample_covariance(stats, prenormalized: bool = False) -> np.ndarray:
    """Left-fold a list of PartitionStats into one sample covariance matrix.

    ``prenormalized=True`` selects the flawed comparison rule above.
    """
    if not stats:
        raise EmptyPartition("no partitions")
    if not prenormalized:
        folded = stats[0]
        for s in stats[1:]:
            folded = merge_stats(folded, s)
        return folded.sample_covariance()
    if len(stats) == 1:
        return stats[0].sample_covariance()
    cov = None
    acc = stats[0]
    for s in stats[1:]:
        cov = prenormalized_merge_covariance(acc, s)
        acc = merge_stats(acc, s)  # counts/means still fold exactly
    return cov


def fit_eigenfaces_incremental(partitions, nc: int, covariance_cap: int = 16384):
    """Eigenface model from per-partition vector lists; matches the batch fit."""
    from .eigen import EigenfaceProjector

    return EigenfaceProjector(n_components=nc, covariance_cap=covariance_cap).fit_partitions(
        partitions
    )
