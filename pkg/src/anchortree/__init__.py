"""Anchors hierarchy, statistics-decorated metric trees, and exact accelerated
K-means, range-count anomaly detection and all-pairs attribute correlation."""

from .allpairs import (
    CorrelatedPairSet,
    NormalizedAttributes,
    brute_force_pairs,
    correlation_threshold_to_distance,
    find_correlated_pairs,
    normalize_attributes,
)
from .anchors import (
    Anchor,
    AnchorSaturationError,
    AnchorSet,
    add_anchor,
    anchors_as_seed_centroids,
    build_anchors,
    choose_next_anchor,
    validate_anchors,
)
from .anomaly import AnomalyQuery, brute_force_range_count, is_anomaly, range_count
from .kmeans import (
    KmeansResult,
    StepAccumulator,
    distortion,
    fast_kmeans_step,
    naive_kmeans_step,
    run_kmeans,
)
from .metricspace import (
    CSVFormatError,
    Dataset,
    DimensionMismatchError,
    DistanceCounter,
    centroid,
    distance,
    distances,
)
from .tree import (
    BuildConfig,
    MetricTree,
    TreeNode,
    build_middle_out,
    build_top_down,
    build_tree,
    merge_nodes,
    node_compatibility,
    validate_tree,
)

__version__ = "0.1.0"
