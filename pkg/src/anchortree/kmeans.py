"""Exact K-means: a naive per-point step and the tree-accelerated step.

The accelerated step walks the metric tree carrying a shrinking set of
candidate centroids. At each node the candidate nearest the pivot (``c*``)
is found and any candidate ``c`` with

    D(c*, pivot) + radius <= D(c, pivot) - radius

is dropped, since by the triangle inequality no owned point can be closer
to ``c`` than to ``c*``. When a single candidate survives, the node's cached
count and vector total are credited to it without touching the points.
Both steps break ties towards the lowest centroid index and share one
distance kernel, so they produce identical assignments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .anchors import anchors_as_seed_centroids, build_anchors
from .metricspace import Dataset, DistanceCounter, DimensionMismatchError, distances, pairwise_distances
from .tree import MetricTree, TreeNode

# Relative guard band on the pruning test; see ``_prune``.
PRUNE_GUARD = 1e-12


@dataclass
class StepAccumulator:
    sums: np.ndarray
    counts: np.ndarray

    @classmethod
    def zeros(cls, K: int, M: int) -> "StepAccumulator":
        return cls(np.zeros((K, M)), np.zeros(K, dtype=np.int64))

    def next_centroids(self, previous: np.ndarray) -> np.ndarray:
        """Centre of mass per centroid; a centroid that owns nothing stays put."""
        out = previous.copy()
        nz = self.counts > 0
        out[nz] = self.sums[nz] / self.counts[nz, None]
        return out

    def merge(self, other: "StepAccumulator") -> "StepAccumulator":
        return StepAccumulator(self.sums + other.sums, self.counts + other.counts)


@dataclass
class KmeansResult:
    centroids: np.ndarray
    distortions: list[float]
    iterations: int
    distance_count: int
    step_counts: list[int] = field(default_factory=list)
    init_distance_count: int = 0

    @property
    def start_distortion(self) -> float:
        return self.distortions[0]

    @property
    def final_distortion(self) -> float:
        return self.distortions[-1]


def _as_centroids(cents, M: int) -> np.ndarray:
    C = np.atleast_2d(np.asarray(cents, dtype=np.float64))
    if C.shape[0] < 1:
        raise ValueError("need at least one centroid")
    if C.shape[1] != M:
        raise DimensionMismatchError(f"centroids have dimension {C.shape[1]}, data {M}")
    return C


def _assign(points: np.ndarray, C: np.ndarray, counter: DistanceCounter) -> np.ndarray:
    # argmin returns the first minimum, i.e. the lowest centroid index on ties
    return np.argmin(pairwise_distances(points, C, counter), axis=1)


def naive_kmeans_step(data: Dataset, cents, counter: DistanceCounter) -> StepAccumulator:
    """Assign every point to its nearest centroid; costs exactly R*K distances."""
    C = _as_centroids(cents, data.M)
    owner = _assign(data.points, C, counter)
    acc = StepAccumulator.zeros(len(C), data.M)
    np.add.at(acc.sums, owner, data.points)
    acc.counts += np.bincount(owner, minlength=len(C))
    return acc


def _prune(d: np.ndarray, radius: float) -> tuple[int, np.ndarray]:
    """Return the position of ``c*`` and a keep-mask over the candidates.

    The inequality is tested with a vanishing relative guard band so that
    rounding in the computed distances can never drop a centroid that ties
    with or beats ``c*`` for some owned point.
    """
    star = int(np.argmin(d))
    lhs = d[star] + radius
    rhs = d - radius
    guard = PRUNE_GUARD * (d + d[star] + 2.0 * radius)
    keep = ~(lhs + guard <= rhs)
    keep[star] = True
    return star, keep


def fast_kmeans_step(
    tree: MetricTree,
    cents,
    counter: DistanceCounter,
    debug: bool = False,
) -> StepAccumulator:
    """Tree-accelerated K-means step, identical in result to :func:`naive_kmeans_step`.

    With ``debug=True`` every node checks (without counting) that the true
    nearest centroid of each owned point survives in the candidate set.
    """
    data = tree.data
    C = _as_centroids(cents, data.M)
    if tree.root.count != data.R:
        raise ValueError("tree does not index this dataset")
    X = data.points
    acc = StepAccumulator.zeros(len(C), data.M)
    true_owner = _assign(X, C, DistanceCounter()) if debug else None

    def visit(node: TreeNode, cands: np.ndarray) -> None:
        if debug and not np.all(np.isin(true_owner[node.indices], cands)):
            raise AssertionError(f"node {node.node_id}: true owner missing from candidates")
        d = distances(C[cands], node.pivot, counter)
        _, keep = _prune(d, node.radius)
        cands = cands[keep]
        if debug and not np.all(np.isin(true_owner[node.indices], cands)):
            raise AssertionError(f"node {node.node_id}: pruning removed a true owner")
        if len(cands) == 1:
            c = cands[0]
            acc.sums[c] += node.total
            acc.counts[c] += node.count
        elif node.is_leaf:
            owner = cands[_assign(X[node.indices], C[cands], counter)]
            np.add.at(acc.sums, owner, X[node.indices])
            acc.counts += np.bincount(owner, minlength=len(C))
        else:
            visit(node.left, cands)
            visit(node.right, cands)

    visit(tree.root, np.arange(len(C)))
    return acc


def distortion(data: Dataset, cents, counter: DistanceCounter) -> float:
    """Sum over points of the squared distance to the nearest centroid."""
    C = _as_centroids(cents, data.M)
    D = pairwise_distances(data.points, C, counter)
    return float(np.sum(D.min(axis=1) ** 2))


def random_init(data: Dataset, K: int, seed: int | np.random.Generator = 0) -> np.ndarray:
    """K distinct dataset points chosen uniformly at random."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return data.points[np.sort(rng.choice(data.R, size=K, replace=False))].copy()


def anchors_init(data: Dataset, K: int, counter: DistanceCounter, seed: int | np.random.Generator = 0) -> np.ndarray:
    """Centroids of the K anchors' owned sets."""
    return anchors_as_seed_centroids(build_anchors(data, K, counter, seed=seed))


def run_kmeans(
    data: Dataset,
    K: int,
    tree: MetricTree | None = None,
    init: Literal["random", "anchors"] | np.ndarray = "random",
    seed: int = 0,
    max_iters: int = 50,
    counter: DistanceCounter | None = None,
    tol: float = 1e-12,
) -> KmeansResult:
    """Iterate K-means steps (accelerated when ``tree`` is given).

    ``distortions[0]`` is the distortion of the initial centroids and
    ``distortions[i]`` that after iteration ``i``. The distortion trace is
    bookkeeping and is not charged to ``counter``; neither is the cost of
    anchors initialisation, which is reported separately.
    """
    if K < 1 or K > data.R:
        raise ValueError(f"K={K} must be in [1, R={data.R}]")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    if tree is not None and tree.data is not data:
        if tree.data.points.shape != data.points.shape or not np.array_equal(tree.data.points, data.points):
            raise ValueError("tree was built over a different dataset")
    counter = counter if counter is not None else DistanceCounter()
    init_counter = DistanceCounter()
    if isinstance(init, str):
        if init == "random":
            C = random_init(data, K, seed)
        elif init == "anchors":
            C = anchors_init(data, K, init_counter, seed)
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        C = _as_centroids(init, data.M).copy()
        if len(C) != K:
            raise ValueError(f"init has {len(C)} centroids, expected K={K}")

    side = DistanceCounter()
    trace = [distortion(data, C, side)]
    step_counts = []
    start = counter.count
    iters = 0
    for _ in range(max_iters):
        before = counter.count
        if tree is None:
            acc = naive_kmeans_step(data, C, counter)
        else:
            acc = fast_kmeans_step(tree, C, counter)
        step_counts.append(counter.count - before)
        new = acc.next_centroids(C)
        moved = float(np.max(np.linalg.norm(new - C, axis=1)))
        C = new
        iters += 1
        trace.append(distortion(data, C, side))
        if moved <= tol:
            break
    return KmeansResult(
        centroids=C,
        distortions=trace,
        iterations=iters,
        distance_count=counter.count - start,
        step_counts=step_counts,
        init_distance_count=init_counter.count,
    )
