"""Threshold-driven clustering and outlier detection for multivariate time
series, built on Haar-wavelet multi-resolution representations.

A clustering-feature tree groups stations at a coarse wavelet resolution;
its leaf count fixes the number of clusters, its leaves seed a K-Means
refinement that walks to finer resolutions, and unusually small final
clusters are flagged as outliers. A tree-only baseline mode at full
resolution is included for comparison.
"""

__version__ = "0.1.0"

from .cftree import CFNode, CFTree, split_node
from .features import (
    ClusteringFeature,
    avg_intercluster_dist_sq,
    brute_force_avg_dist_sq,
    centroid,
    cf_from_point,
    cf_merge,
    panel_dist_sq,
)
from .ikmeans import RefinementState, assign_step, refine, seed_from_leaves, update_step
from .pipeline import (
    AWTConfig,
    ClusteringResult,
    auto_cutoff,
    awt_cluster,
    birch_baseline,
    count_clusters_for_threshold,
)
from .preprocess import (
    DataError,
    PanelSeries,
    RawStationRecord,
    build_panel_dataset,
    filter_stations,
    height_correct,
    interpolate_missing,
    mean_height,
    zscale,
)
from .evaluate import cluster_mean_series, nmi, resolution_study, size_profile
from .wavelet import (
    WaveletCoefficients,
    WaveletPanel,
    decompose_panel,
    drop_finest_levels,
    haar_decompose,
    haar_reconstruct,
    pad_to_pow2,
    prefix_flat,
)

__all__ = [
    "__version__",
    "AWTConfig", "ClusteringResult", "CFNode", "CFTree", "ClusteringFeature",
    "DataError", "PanelSeries", "RawStationRecord", "RefinementState",
    "WaveletCoefficients", "WaveletPanel",
    "assign_step", "auto_cutoff", "avg_intercluster_dist_sq", "awt_cluster",
    "birch_baseline", "brute_force_avg_dist_sq", "build_panel_dataset",
    "centroid", "cf_from_point", "cf_merge", "cluster_mean_series",
    "count_clusters_for_threshold", "decompose_panel", "drop_finest_levels",
    "filter_stations", "haar_decompose", "haar_reconstruct", "height_correct",
    "interpolate_missing", "mean_height", "nmi", "pad_to_pow2", "panel_dist_sq",
    "prefix_flat", "refine", "resolution_study", "seed_from_leaves",
    "size_profile", "split_node", "update_step", "zscale",
]
