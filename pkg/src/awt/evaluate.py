"""Result evaluation: assignment similarity, size profiles, mean series.

Normalized mutual information is computed with natural-log entropies and
the geometric-mean normalisation sqrt(H(A) * H(B)); degenerate zero-entropy
partitions are fixed by convention (1.0 when both sides are a single
cluster, 0.0 when exactly one is) so parameter studies never crash on
trivial runs.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .pipeline import AWTConfig, ClusteringResult, run
from .preprocess import inverse_zscale
from .wavelet import WaveletPanel, haar_reconstruct


def nmi(a: dict, b: dict) -> float:
    """Normalized mutual information between two label assignments in [0, 1].

    Both assignments must cover exactly the same ids; labels may be any
    hashable values and need not be contiguous.
    """
    if not a:
        raise ValueError("assignments must cover at least one id")
    if set(a) != set(b):
        raise ValueError("assignments cover different id sets")
    ids = list(a)
    labels_a = _codes([a[i] for i in ids])
    labels_b = _codes([b[i] for i in ids])
    contingency = np.zeros((labels_a.max() + 1, labels_b.max() + 1))
    np.add.at(contingency, (labels_a, labels_b), 1.0)
    joint = contingency / contingency.sum()
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    ha = _entropy(pa)
    hb = _entropy(pb)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    nz = joint > 0
    mi = float(np.sum(joint[nz] * (np.log(joint[nz])
                                   - np.log(np.outer(pa, pb)[nz]))))
    value = mi / np.sqrt(ha * hb)
    return min(1.0, max(0.0, value))


def _codes(labels: list) -> np.ndarray:
    mapping = {}
    for label in labels:
        if label not in mapping:
            mapping[label] = len(mapping)
    return np.fromiter((mapping[label] for label in labels), dtype=int,
                       count=len(labels))


def _entropy(p: np.ndarray) -> float:
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def size_profile(result: ClusteringResult) -> tuple[list[int], list[float]]:
    """Cluster sizes sorted descending plus consecutive size ratios.

    The ratio list has one entry per adjacent pair; a drop to an empty
    cluster yields an infinite ratio.
    """
    sizes = result.sizes_desc()
    if not sizes:
        raise ValueError("result has no clusters")
    ratios = [a / b if b else (float("inf") if a else 1.0)
              for a, b in zip(sizes, sizes[1:])]
    return sizes, ratios


def cluster_mean_series(result: ClusteringResult,
                        panels: list[WaveletPanel],
                        scaling: list[tuple[float, float]] | None = None,
                        ) -> dict[int, list[np.ndarray]]:
    """Pointwise mean of the reconstructed member series per cluster.

    One array per parameter, on the original (unpadded) time grid. When
    per-parameter (mean, stddev) scaling statistics are given, the means
    are mapped back to physical units.
    """
    panels_by_id = {p.station_id: p for p in panels}
    missing = [pid for pid in result.assignments if pid not in panels_by_id]
    if missing:
        raise ValueError(f"panels missing for assigned stations: {missing[:10]}")
    out: dict[int, list[np.ndarray]] = {}
    for cluster in result.clusters:
        if not cluster.member_ids:
            out[cluster.cluster_id] = []
            continue
        per_param = []
        n_params = panels_by_id[cluster.member_ids[0]].parameter_count
        for p in range(n_params):
            stack = np.stack([haar_reconstruct(panels_by_id[pid].per_parameter[p])
                              for pid in cluster.member_ids])
            mean = stack.mean(axis=0)
            if scaling is not None:
                mean = inverse_zscale(mean, *scaling[p])
            per_param.append(mean)
        out[cluster.cluster_id] = per_param
    return out


def resolution_study(panels: list[WaveletPanel], config: AWTConfig,
                     drop_grid: list[int]) -> list[tuple[int, int, float]]:
    """Similarity of reduced-resolution runs to the full-resolution run.

    Clusters the same panels once per entry of ``drop_grid`` (same insertion
    order, same configuration apart from ``drop_levels``) and reports one
    row per run: (tree_levels, remaining level count, similarity to the
    drop-0 run).
    """
    if not drop_grid:
        raise ValueError("drop grid is empty")
    available = panels[0].level_count
    for drop in drop_grid:
        replace(config, drop_levels=drop).validate_for(available)
    reference = run(panels, replace(config, drop_levels=0))
    rows = []
    for drop in drop_grid:
        result = reference if drop == 0 else run(panels, replace(config, drop_levels=drop))
        rows.append((config.tree_levels, available - drop,
                     nmi(reference.assignments, result.assignments)))
    return rows
