"""K-Means refinement over increasing wavelet resolutions.

The cluster count and the initial centroids both come from the leaves of a
clustering-feature tree, so neither has to be guessed. Starting at the tree's
resolution, plain assign/update iterations run to convergence; the resolution
is then raised one level at a time, re-deriving each centroid from its
members in the longer coefficient space, until the finest available level.
A resolution level during which no point changed cluster ends the refinement
early, since finer coefficients only sharpen distances that already agree.

The cluster count never changes: clusters that empty out keep their previous
centroid and may re-acquire points at a finer resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import ClusteringFeature, centroid
from .wavelet import WaveletPanel, prefix_flat, prefix_length


@dataclass
class RefinementState:
    """Mutable state of one refinement run."""

    centroids: np.ndarray              # (k, dim at current resolution)
    assignments: dict                  # point id -> cluster index in [0, k)
    resolution: int                    # level count currently in use
    history: list[int] = field(default_factory=list)       # iterations per level
    sse_history: list[list[float]] = field(default_factory=list)  # per level

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def seed_from_leaves(leaves: list[tuple[ClusteringFeature, list]],
                     resolution: int) -> RefinementState:
    """Initial state from tree leaves: centroids are leaf centroids, the
    assignment copies leaf membership, k is the leaf count."""
    if not leaves:
        raise ValueError("cannot seed from an empty leaf list")
    assignments = {}
    for idx, (_, member_ids) in enumerate(leaves):
        for pid in member_ids:
            assignments[pid] = idx
    return RefinementState(
        centroids=np.stack([centroid(cf) for cf, _ in leaves]),
        assignments=assignments,
        resolution=resolution,
    )


def seed_random(points: np.ndarray, pids: list, k: int, resolution: int,
                rng: np.random.Generator) -> RefinementState:
    """Random seeding (distinct points as centroids, nearest-centroid start).

    Exists only so tests can contrast tree seeding with a naive start; the
    pipeline never uses it.
    """
    choice = rng.choice(len(pids), size=k, replace=False)
    centroids = points[np.sort(choice)].copy()
    state = RefinementState(centroids=centroids,
                            assignments={pid: 0 for pid in pids},
                            resolution=resolution)
    state.assignments, _ = assign_step(state, points, pids)
    return state


def assign_step(state: RefinementState, points: np.ndarray,
                pids: list) -> tuple[dict, int]:
    """Assign every point to its nearest centroid (ties to the lowest index).

    Returns the new assignment and how many points changed cluster.
    """
    if points.shape[1] != state.centroids.shape[1]:
        raise ValueError(f"dimension mismatch: points {points.shape[1]} vs "
                         f"centroids {state.centroids.shape[1]}")
    # one (n, dim) buffer per cluster instead of an (n, k, dim) broadcast,
    # so full-resolution panels stay within memory
    dists = np.empty((points.shape[0], state.k))
    for idx in range(state.k):
        diff = points - state.centroids[idx]
        dists[:, idx] = np.sum(diff * diff, axis=1)
    labels = np.argmin(dists, axis=1)
    new_assignments = {pid: int(label) for pid, label in zip(pids, labels)}
    changed = sum(1 for pid in pids if new_assignments[pid] != state.assignments.get(pid))
    return new_assignments, changed


def update_step(state: RefinementState, points: np.ndarray,
                pids: list) -> np.ndarray:
    """Recompute centroids as member means; empty clusters keep theirs."""
    new_centroids = state.centroids.copy()
    labels = np.fromiter((state.assignments[pid] for pid in pids), dtype=int,
                         count=len(pids))
    for idx in range(state.k):
        mask = labels == idx
        if mask.any():
            new_centroids[idx] = points[mask].mean(axis=0)
    return new_centroids


def total_sse(state: RefinementState, points: np.ndarray, pids: list) -> float:
    labels = np.fromiter((state.assignments[pid] for pid in pids), dtype=int,
                         count=len(pids))
    diff = points - state.centroids[labels]
    return float(np.sum(diff * diff))


def _project_centroids(centroids: np.ndarray, old_levels: int, new_levels: int,
                       parameter_count: int) -> np.ndarray:
    """Widen centroids to a finer resolution, zero-filling the coefficient
    slots newly exposed at the end of every parameter segment."""
    old_len = prefix_length(old_levels)
    new_len = prefix_length(new_levels)
    out = np.zeros((centroids.shape[0], parameter_count * new_len))
    for p in range(parameter_count):
        out[:, p * new_len: p * new_len + old_len] = \
            centroids[:, p * old_len: (p + 1) * old_len]
    return out


def refine(panels: list[WaveletPanel],
           leaves: list[tuple[ClusteringFeature, list]],
           start_levels: int,
           max_levels: int,
           max_iters_per_level: int = 100) -> RefinementState:
    """Run the full resolution-increasing refinement and return final state."""
    if not 1 <= start_levels <= max_levels <= panels[0].level_count:
        raise ValueError(f"need 1 <= start ({start_levels}) <= max ({max_levels}) "
                         f"<= available ({panels[0].level_count}) levels")
    if max_iters_per_level < 1:
        raise ValueError("max_iters_per_level must be positive")
    pids = [p.station_id for p in panels]
    state = seed_from_leaves(leaves, start_levels)
    if state.centroids.shape[1] != prefix_flat(panels[0], start_levels).size:
        raise ValueError("leaf feature dimensionality does not match the "
                         f"{start_levels}-level prefix of the panels")
    n_params = panels[0].parameter_count

    for level in range(start_levels, max_levels + 1):
        points = np.stack([prefix_flat(p, level) for p in panels])
        if level > state.resolution:
            state.centroids = _project_centroids(
                state.centroids, state.resolution, level, n_params)
            state.resolution = level
            state.centroids = update_step(state, points, pids)
        level_sse = [total_sse(state, points, pids)]
        level_changed = 0
        iters = 0
        while iters < max_iters_per_level:
            new_assignments, changed = assign_step(state, points, pids)
            iters += 1
            if changed == 0:
                break
            state.assignments = new_assignments
            state.centroids = update_step(state, points, pids)
            level_changed += changed
            level_sse.append(total_sse(state, points, pids))
        state.history.append(iters)
        state.sse_history.append(level_sse)
        if level_changed == 0:
            break
    return state
