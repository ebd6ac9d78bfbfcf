"""End-to-end clustering runs and the size-step outlier cutoff.

The main entry point builds a clustering-feature tree over a coarse
wavelet prefix of every station panel, takes the cluster count and seed
centroids from its leaves, refines assignments at increasing resolutions,
and finally flags outlier clusters. The baseline mode clusters the
full-resolution coefficients with the tree alone (no refinement) and flags
small leaves directly, for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ikmeans
from .cftree import CFTree
from .features import centroid
from .wavelet import WaveletPanel, drop_finest_levels, haar_reconstruct, prefix_flat

MODE_AWT = "awt"
MODE_BIRCH = "birch"

# A size drop steeper than this marks the inlier/outlier boundary; gentler
# profiles fall back to the plain small-cluster rule.
CUTOFF_RATIO_FLOOR = 2.0


@dataclass(frozen=True)
class AWTConfig:
    """Parameters of one clustering run.

    ``threshold`` is in squared (scaled) distance units. ``tree_levels`` is
    the number of coarsest wavelet levels the tree clusters on;
    ``drop_levels`` discards the finest levels everywhere to save memory.
    ``outlier_max_size``, when set, replaces the automatic size-step cutoff
    with a plain "clusters of at most this size are outliers" rule.
    """

    threshold: float = 1.0
    tree_levels: int = 3
    drop_levels: int = 0
    branching_factor: int = 8
    max_iters_per_level: int = 100
    outlier_max_size: int | None = None
    mode: str = MODE_AWT

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.tree_levels < 1:
            raise ValueError("tree_levels must be at least 1")
        if self.drop_levels < 0:
            raise ValueError("drop_levels must be non-negative")
        if self.branching_factor < 2:
            raise ValueError("branching_factor must be at least 2")
        if self.max_iters_per_level < 1:
            raise ValueError("max_iters_per_level must be positive")
        if self.outlier_max_size is not None and self.outlier_max_size < 0:
            raise ValueError("outlier_max_size must be non-negative")
        if self.mode not in (MODE_AWT, MODE_BIRCH):
            raise ValueError(f"unknown mode {self.mode!r}")

    def validate_for(self, available_levels: int) -> None:
        if self.drop_levels >= available_levels:
            raise ValueError(f"cannot drop {self.drop_levels} of "
                             f"{available_levels} levels")
        # the baseline clusters on all remaining levels and never reads
        # tree_levels, so the range check applies to the awt mode only
        if (self.mode == MODE_AWT
                and self.tree_levels > available_levels - self.drop_levels):
            raise ValueError(
                f"tree_levels ({self.tree_levels}) exceeds the "
                f"{available_levels - self.drop_levels} levels available "
                f"after dropping {self.drop_levels}")


@dataclass(frozen=True)
class ClusterInfo:
    cluster_id: int
    member_ids: tuple
    centroid: np.ndarray
    is_outlier: bool

    @property
    def size(self) -> int:
        return len(self.member_ids)


@dataclass(frozen=True)
class ClusteringResult:
    """Final assignment of every station plus per-cluster summaries."""

    clusters: tuple[ClusterInfo, ...]
    assignments: dict
    k: int
    config: AWTConfig
    mean_series: dict[int, list[np.ndarray]]   # cluster id -> per-parameter means
    iterations_per_level: tuple[int, ...] = ()
    sse_per_level: tuple[tuple[float, ...], ...] = ()

    @property
    def outlier_station_ids(self) -> list:
        return [pid for c in self.clusters if c.is_outlier for pid in c.member_ids]

    def sizes_desc(self) -> list[int]:
        return sorted((c.size for c in self.clusters), reverse=True)


def auto_cutoff(sizes_desc: list[int]) -> int | None:
    """Index of the last inlier cluster in a descending size profile.

    Looks for the steepest relative size drop: the boundary goes after the
    position with the maximal sizes[i] / sizes[i+1] ratio (latest such
    position on ties, keeping more inliers). Profiles whose steepest drop is
    a factor of two or less have no clear step and yield None, as do
    profiles with fewer than two clusters. Empty clusters are ignored for
    the search; they always land on the outlier side.
    """
    positive = [s for s in sizes_desc if s > 0]
    if len(sizes_desc) < 2 or len(positive) < 2:
        return None
    if any(a < b for a, b in zip(positive, positive[1:])):
        raise ValueError("sizes must be sorted in descending order")
    ratios = [a / b for a, b in zip(positive, positive[1:])]
    best = max(ratios)
    if best <= CUTOFF_RATIO_FLOOR:
        return None
    return max(i for i, r in enumerate(ratios) if r == best)


def _validate_panels(panels: list[WaveletPanel]) -> None:
    if not panels:
        raise ValueError("need at least one panel")
    first = panels[0]
    seen = set()
    for p in panels:
        if (p.level_count != first.level_count
                or p.parameter_count != first.parameter_count
                or p.per_parameter[0].padded_length != first.per_parameter[0].padded_length):
            raise ValueError(f"panel {p.station_id!r} does not match the "
                             "structure of the first panel")
        if p.station_id in seen:
            raise ValueError(f"duplicate station id {p.station_id!r}")
        seen.add(p.station_id)


def _build_tree(panels: list[WaveletPanel], levels: int,
                threshold: float, branching_factor: int) -> CFTree:
    dim = prefix_flat(panels[0], levels).size
    tree = CFTree(threshold=threshold, branching_factor=branching_factor,
                  dimensionality=dim)
    for panel in panels:
        tree.insert(panel.station_id, prefix_flat(panel, levels))
    return tree


def _flag_outliers(members_per_cluster: list[list], config: AWTConfig,
                   baseline: bool) -> dict[int, bool]:
    """Outlier flag per cluster index from final cluster sizes."""
    sizes = [len(m) for m in members_per_cluster]
    order = sorted(range(len(sizes)), key=lambda i: (-sizes[i], i))
    flags = {i: False for i in range(len(sizes))}
    if len(sizes) < 2:
        return flags
    if baseline or config.outlier_max_size is not None:
        max_size = config.outlier_max_size if config.outlier_max_size is not None \
            else (2 if baseline else 1)
        return {i: sizes[i] <= max_size for i in range(len(sizes))}
    boundary = auto_cutoff([sizes[i] for i in order])
    if boundary is None:
        return {i: sizes[i] <= 1 for i in range(len(sizes))}
    for rank, idx in enumerate(order):
        flags[idx] = rank > boundary
    return flags


def _mean_series(panels_by_id: dict, members_per_cluster: list[list],
                 ) -> dict[int, list[np.ndarray]]:
    """Pointwise time-domain mean of the reconstructed member series."""
    out: dict[int, list[np.ndarray]] = {}
    for idx, members in enumerate(members_per_cluster):
        if not members:
            out[idx] = []
            continue
        per_param: list[np.ndarray] = []
        n_params = panels_by_id[members[0]].parameter_count
        for p in range(n_params):
            stack = np.stack([haar_reconstruct(panels_by_id[pid].per_parameter[p])
                              for pid in members])
            per_param.append(stack.mean(axis=0))
        out[idx] = per_param
    return out


def _assemble(members_per_cluster: list[list], centroids: np.ndarray,
              assignments: dict, config: AWTConfig,
              panels_by_id: dict, baseline: bool,
              iterations: tuple[int, ...] = (),
              sse: tuple[tuple[float, ...], ...] = ()) -> ClusteringResult:
    flags = _flag_outliers(members_per_cluster, config, baseline)
    mean_series = _mean_series(panels_by_id, members_per_cluster)
    clusters = tuple(
        ClusterInfo(cluster_id=i, member_ids=tuple(members),
                    centroid=centroids[i], is_outlier=flags[i])
        for i, members in enumerate(members_per_cluster)
    )
    return ClusteringResult(clusters=clusters, assignments=dict(assignments),
                            k=len(clusters), config=config,
                            mean_series=mean_series,
                            iterations_per_level=iterations,
                            sse_per_level=sse)


def awt_cluster(panels: list[WaveletPanel], config: AWTConfig) -> ClusteringResult:
    """Tree construction, leaf-seeded refinement, and outlier flagging.

    The cluster count equals the tree's leaf count and is set while the
    tree is built on ``tree_levels`` coarse levels, so dropping fine levels
    changes only the refinement, never k.
    """
    _validate_panels(panels)
    config.validate_for(panels[0].level_count)
    working = [drop_finest_levels(p, config.drop_levels) for p in panels]
    tree = _build_tree(working, config.tree_levels, config.threshold,
                       config.branching_factor)
    leaves = tree.leaf_clusters()
    state = ikmeans.refine(working, leaves,
                           start_levels=config.tree_levels,
                           max_levels=working[0].level_count,
                           max_iters_per_level=config.max_iters_per_level)
    members_per_cluster: list[list] = [[] for _ in range(state.k)]
    for panel in working:
        members_per_cluster[state.assignments[panel.station_id]].append(panel.station_id)
    return _assemble(members_per_cluster, state.centroids, state.assignments,
                     config, {p.station_id: p for p in working}, baseline=False,
                     iterations=tuple(state.history),
                     sse=tuple(tuple(s) for s in state.sse_history))


def birch_baseline(panels: list[WaveletPanel], config: AWTConfig) -> ClusteringResult:
    """Tree-only clustering on all available levels; leaves are the clusters.

    No refinement runs, and outliers are simply the clusters with at most
    ``outlier_max_size`` (default 2) members. ``tree_levels`` is not used.
    """
    _validate_panels(panels)
    if config.drop_levels >= panels[0].level_count:
        raise ValueError(f"cannot drop {config.drop_levels} of "
                         f"{panels[0].level_count} levels")
    working = [drop_finest_levels(p, config.drop_levels) for p in panels]
    tree = _build_tree(working, working[0].level_count, config.threshold,
                       config.branching_factor)
    leaves = tree.leaf_clusters()
    members_per_cluster = [list(member_ids) for _, member_ids in leaves]
    centroids = np.stack([centroid(cf) for cf, _ in leaves])
    assignments = {pid: idx for idx, members in enumerate(members_per_cluster)
                   for pid in members}
    return _assemble(members_per_cluster, centroids, assignments, config,
                     {p.station_id: p for p in working}, baseline=True)


def run(panels: list[WaveletPanel], config: AWTConfig) -> ClusteringResult:
    """Dispatch on the configured mode."""
    if config.mode == MODE_BIRCH:
        return birch_baseline(panels, config)
    return awt_cluster(panels, config)


def count_clusters_for_threshold(panels: list[WaveletPanel],
                                 thresholds: list[float],
                                 config: AWTConfig) -> list[tuple[float, int]]:
    """Cluster count per threshold over an ascending grid.

    Only the tree construction runs (the count is fixed once the tree
    exists); insertion order is the panel order for every grid point.
    """
    if not thresholds:
        raise ValueError("threshold grid is empty")
    if any(a >= b for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("threshold grid must be strictly ascending")
    _validate_panels(panels)
    config.validate_for(panels[0].level_count)
    working = [drop_finest_levels(p, config.drop_levels) for p in panels]
    levels = (working[0].level_count if config.mode == MODE_BIRCH
              else config.tree_levels)
    out = []
    for threshold in thresholds:
        tree = _build_tree(working, levels, threshold, config.branching_factor)
        out.append((threshold, tree.leaf_count()))
    return out
