"""Clustering-feature algebra and the distance functions built on it.

A clustering feature is the triple (n, ls, ss): member count, element-wise
linear sum of the member vectors, and the scalar sum of their squared norms.
The triple is additive under cluster merges and is sufficient for both the
centroid (ls / n) and the squared average inter-cluster distance, so whole
clusters can be summarised without keeping their points.

All distances in this package are squared; thresholds therefore live in
squared-distance units.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

# Rounding slack allowed when the algebraic distance form dips below zero
# for near-duplicate clusters; anything worse indicates corrupted features.
_CLAMP_REL = 1e-9


@dataclass(frozen=True)
class ClusteringFeature:
    """Sufficient statistics (n, ls, ss) of a cluster of vectors."""

    n: int
    ls: np.ndarray
    ss: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a clustering feature must cover at least one point")
        if self.ss < 0:
            raise ValueError("sum of squared norms cannot be negative")

    @property
    def dim(self) -> int:
        return self.ls.size


def cf_from_point(v: np.ndarray) -> ClusteringFeature:
    """Clustering feature of a single point: (1, v, <v, v>)."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("point contains non-finite values")
    return ClusteringFeature(n=1, ls=v.copy(), ss=float(v @ v))


def cf_merge(a: ClusteringFeature, b: ClusteringFeature) -> ClusteringFeature:
    """Feature of the union of two clusters; component-wise sums."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return ClusteringFeature(n=a.n + b.n, ls=a.ls + b.ls, ss=a.ss + b.ss)


def centroid(cf: ClusteringFeature) -> np.ndarray:
    return cf.ls / cf.n


def avg_intercluster_dist_sq(a: ClusteringFeature, b: ClusteringFeature) -> float:
    """Squared average inter-cluster distance from features alone.

    Equals the mean over all cross pairs of squared Euclidean distances,
    computed as (n_a * ss_b + n_b * ss_a - 2 <ls_a, ls_b>) / (n_a * n_b).
    Tiny negative rounding residue (bounded relative to ss_a + ss_b) is
    clamped to zero; a larger negative value raises, since the identity
    cannot produce one from consistent features.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    d = (a.n * b.ss + b.n * a.ss - 2.0 * float(a.ls @ b.ls)) / (a.n * b.n)
    if d < 0.0:
        if -d <= _CLAMP_REL * (a.ss + b.ss):
            logger.debug("clamped negative distance %.3e to zero", d)
            return 0.0
        raise ValueError(f"negative inter-cluster distance {d} exceeds rounding bound")
    return d


def brute_force_avg_dist_sq(points_a, points_b) -> float:
    """Mean squared Euclidean distance over all cross pairs of two point sets.

    Direct evaluation of the definition; kept as the independent oracle for
    :func:`avg_intercluster_dist_sq`.
    """
    a = np.asarray(points_a, dtype=float)
    b = np.asarray(points_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("point sets must be non-empty")
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    diff = a[:, None, :] - b[None, :, :]
    return float(np.mean(np.sum(diff * diff, axis=-1)))


def panel_dist_sq(x: np.ndarray, y: np.ndarray) -> float:
    """Squared distance between two flat coefficient prefixes.

    With per-parameter segments concatenated, this is exactly the sum over
    parameters of per-parameter squared coefficient distances.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    diff = x - y
    return float(diff @ diff)
