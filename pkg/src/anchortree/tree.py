"""Binary metric trees decorated with cached sufficient statistics.

Each node stores a pivot, a radius bounding every owned point, the owned
count, the vector total and centroid of the owned points, and the owned
indices. Two builders are provided: the classic top-down splitter
(furthest point from the centroid, then furthest from that) and the
middle-out builder, which places sqrt(n) anchors, agglomerates them into a
binary tree by compatibility, and recurses into each anchor's points.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

from .anchors import build_anchors
from .metricspace import (
    Dataset,
    DistanceCounter,
    distance,
    distances,
    sq_distances,
    vector_sum,
)

# Relative inflation applied to bound-only radii so that floating rounding in
# d(pivot, child pivot) + child radius can never undercut a contained point.
_BOUND_SLACK = 8 * np.finfo(float).eps


@dataclass
class BuildConfig:
    r_min: int = 30
    builder: Literal["middle_out", "top_down"] = "middle_out"
    seed: int = 0
    exact_radius: bool = True

    def __post_init__(self) -> None:
        if self.r_min < 1:
            raise ValueError(f"r_min must be >= 1, got {self.r_min}")
        if self.builder not in ("middle_out", "top_down"):
            raise ValueError(f"unknown builder {self.builder!r}")


@dataclass(eq=False)
class TreeNode:
    pivot: np.ndarray
    radius: float
    count: int
    total: np.ndarray
    indices: np.ndarray
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    node_id: int = -1
    centroid: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.centroid = self.total / self.count

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def children(self) -> tuple["TreeNode", "TreeNode"] | tuple[()]:
        return () if self.left is None else (self.left, self.right)

    def walk(self) -> Iterator["TreeNode"]:
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            if not n.is_leaf:
                stack.append(n.right)
                stack.append(n.left)

    def walk_depth(self) -> Iterator[tuple["TreeNode", int]]:
        stack = [(self, 0)]
        while stack:
            n, depth = stack.pop()
            yield n, depth
            if not n.is_leaf:
                stack.append((n.right, depth + 1))
                stack.append((n.left, depth + 1))


@dataclass(eq=False)
class MetricTree:
    """A built tree together with the dataset it indexes."""

    root: TreeNode
    data: Dataset
    config: BuildConfig
    build_distance_count: int = 0

    def nodes(self) -> Iterator[TreeNode]:
        return self.root.walk()

    def n_nodes(self) -> int:
        return sum(1 for _ in self.root.walk())

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.root.walk() if n.is_leaf]


def _leaf(data: Dataset, idx: np.ndarray, counter: DistanceCounter, pivot=None) -> TreeNode:
    idx = np.sort(idx)
    pts = data.points[idx]
    total = vector_sum(pts)
    piv = total / len(idx) if pivot is None else np.asarray(pivot, dtype=float)
    radius = float(distances(pts, piv, counter).max())
    return TreeNode(pivot=piv, radius=radius, count=len(idx), total=total, indices=idx)


def _split_top_down(data: Dataset, node: TreeNode, counter: DistanceCounter) -> tuple[np.ndarray, np.ndarray] | None:
    """Partition a node's points by nearest of f1 (furthest from pivot) and f2 (furthest from f1)."""
    idx = node.indices
    pts = data.points[idx]
    d_piv = distances(pts, node.pivot, counter)
    f1 = int(np.argmax(d_piv))  # first occurrence: lowest index, idx is sorted
    d1 = distances(pts, pts[f1], counter)
    f2 = int(np.argmax(d1))
    if d1[f2] == 0.0:
        return None
    d2 = distances(pts, pts[f2], counter)
    to_first = d1 <= d2
    return idx[to_first], idx[~to_first]


def build_top_down(data: Dataset, subset, cfg: BuildConfig, counter: DistanceCounter) -> TreeNode:
    """Top-down tree: every node's pivot is the centroid of its points and its radius is exact."""
    subset = np.asarray(subset, dtype=np.int64)
    if len(subset) == 0:
        raise ValueError("cannot build a tree over an empty subset")
    root = _leaf(data, subset, counter)
    stack = [root]
    while stack:
        node = stack.pop()
        if node.count <= cfg.r_min or node.radius == 0.0:
            continue
        halves = _split_top_down(data, node, counter)
        if halves is None:
            continue
        node.left = _leaf(data, halves[0], counter)
        node.right = _leaf(data, halves[1], counter)
        stack.extend([node.right, node.left])
    _number(root)
    return root


def _compat(d: float, r1: float, r2: float) -> float:
    big, small = (r1, r2) if r1 >= r2 else (r2, r1)
    if d + small <= big:
        return big
    return (d + r1 + r2) / 2.0


def node_compatibility(n1: TreeNode, n2: TreeNode, counter: DistanceCounter) -> float:
    """Radius of the smallest ball enclosing both nodes' bounding balls."""
    return _compat(distance(n1.pivot, n2.pivot, counter), n1.radius, n2.radius)


def merge_nodes(n1: TreeNode, n2: TreeNode, counter: DistanceCounter) -> TreeNode:
    """Parent of two disjoint nodes, pivoted at their combined centroid.

    The radius is an upper bound built from the children's balls, not a scan
    of the owned points.
    """
    if n1.count <= 0 or n2.count <= 0:
        raise ValueError("cannot merge an empty node")
    count = n1.count + n2.count
    total = n1.total + n2.total
    pivot = total / count
    d1 = distance(pivot, n1.pivot, counter)
    d2 = distance(pivot, n2.pivot, counter)
    radius = max(d1 + n1.radius, d2 + n2.radius) * (1.0 + _BOUND_SLACK)
    return TreeNode(
        pivot=pivot,
        radius=radius,
        count=count,
        total=total,
        indices=np.sort(np.concatenate([n1.indices, n2.indices])),
        left=n1,
        right=n2,
    )


def _agglomerate(nodes: list[TreeNode], pivot_dist: np.ndarray, counter: DistanceCounter) -> TreeNode:
    """Greedily merge the globally most compatible pair until one node remains.

    ``pivot_dist`` holds the already known distances between the initial
    pivots, so seeding the queue costs nothing.
    """
    live: dict[int, TreeNode] = dict(enumerate(nodes))
    heap: list[tuple[float, int, int]] = []
    for i, j in itertools.combinations(range(len(nodes)), 2):
        c = _compat(float(pivot_dist[i, j]), nodes[i].radius, nodes[j].radius)
        heap.append((c, i, j))
    heapq.heapify(heap)
    next_id = len(nodes)
    while len(live) > 1:
        _, i, j = heapq.heappop(heap)
        if i not in live or j not in live:
            continue
        parent = merge_nodes(live.pop(i), live.pop(j), counter)
        if live:
            ids = list(live)
            d = distances(np.array([live[t].pivot for t in ids]), parent.pivot, counter)
            for t, dt in zip(ids, d.tolist()):
                heapq.heappush(heap, (_compat(dt, live[t].radius, parent.radius), t, next_id))
        live[next_id] = parent
        next_id += 1
    return next(iter(live.values()))


def _tighten(data: Dataset, node: TreeNode, counter: DistanceCounter) -> None:
    node.radius = float(distances(data.points[node.indices], node.pivot, counter).max())


def _collapse_small(node: TreeNode, r_min: int) -> None:
    """Turn interior nodes owning at most ``r_min`` points into leaves."""
    stack = [node]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            continue
        if n.count <= r_min:
            n.left = n.right = None
            continue
        stack.extend([n.left, n.right])


def _zero_diameter(data: Dataset, subset: np.ndarray) -> bool:
    pts = data.points[subset]
    return bool(np.all(pts == pts[0]))


def _middle_out(data: Dataset, subset: np.ndarray, cfg: BuildConfig, counter: DistanceCounter, rng: np.random.Generator) -> TreeNode:
    n = len(subset)
    if n <= cfg.r_min or _zero_diameter(data, subset):
        return _leaf(data, subset, counter)
    m = max(2, math.ceil(math.sqrt(n)))
    aset = build_anchors(data, m, counter, seed=rng, subset=subset)
    X = data.points
    anchor_nodes = []
    for a in aset.anchors:
        idx = np.sort(a.indices)
        total = vector_sum(X[idx])
        # exact radius straight from the sorted cache
        anchor_nodes.append(TreeNode(pivot=X[a.pivot_index].copy(), radius=a.radius,
                                     count=len(idx), total=total, indices=idx))
    root = _agglomerate(anchor_nodes, aset.inter, counter)

    for node in anchor_nodes:
        if node.count <= cfg.r_min or node.radius == 0.0:
            continue
        sub = _middle_out(data, node.indices, cfg, counter, rng)
        if sub.is_leaf:
            continue
        node.left, node.right = sub.left, sub.right
        # keep whichever ball (anchor pivot + exact radius, or the subtree's) is tighter
        if sub.radius < node.radius:
            node.pivot, node.radius = sub.pivot, sub.radius

    if cfg.exact_radius:
        for node in root.walk():
            if not node.is_leaf and node not in anchor_nodes:
                _tighten(data, node, counter)
    _collapse_small(root, cfg.r_min)
    return root


def build_middle_out(data: Dataset, subset, cfg: BuildConfig, counter: DistanceCounter) -> TreeNode:
    """Middle-out tree: anchors first, agglomerate upward, recurse into each anchor."""
    subset = np.asarray(subset, dtype=np.int64)
    if len(subset) == 0:
        raise ValueError("cannot build a tree over an empty subset")
    rng = np.random.default_rng(cfg.seed)
    root = _middle_out(data, np.sort(subset), cfg, counter, rng)
    _number(root)
    return root


def _number(root: TreeNode) -> None:
    for i, n in enumerate(root.walk()):
        n.node_id = i


def build_tree(data: Dataset, cfg: BuildConfig | None = None, counter: DistanceCounter | None = None) -> MetricTree:
    """Build a tree over the whole dataset with the configured builder."""
    cfg = cfg or BuildConfig()
    local = DistanceCounter()
    builder = build_middle_out if cfg.builder == "middle_out" else build_top_down
    root = builder(data, np.arange(data.R), cfg, local)
    if counter is not None:
        counter.add(local.count)
    return MetricTree(root=root, data=data, config=cfg, build_distance_count=local.count)


@dataclass
class Diagnostics:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_tree(data: Dataset, root: TreeNode, r_min: int | None = None) -> Diagnostics:
    """Check containment, partition, cached statistics and leaf size over the whole tree."""
    diag = Diagnostics()
    out = diag.violations
    X = data.points
    leaf_seen = np.zeros(data.R, dtype=np.int64)
    for node in root.walk():
        nid = node.node_id
        idx = node.indices
        if node.count != len(idx):
            out.append(f"node {nid}: count {node.count} != {len(idx)} owned indices")
        if len(idx):
            d = np.sqrt(sq_distances(X[idx], node.pivot))
            worst = float(d.max())
            if worst > node.radius:
                out.append(f"node {nid}: containment violated ({worst!r} > radius {node.radius!r})")
        if node.is_leaf:
            np.add.at(leaf_seen, idx, 1)
            if r_min is not None and node.count > r_min:
                if len(idx) and np.any(X[idx] != X[idx[0]]):
                    out.append(f"node {nid}: leaf holds {node.count} > r_min={r_min} distinct points")
            continue
        l, r = node.left, node.right
        if r_min is not None and node.count <= r_min:
            out.append(f"node {nid}: interior node with count {node.count} <= r_min")
        both = np.concatenate([l.indices, r.indices])
        if len(np.unique(both)) != len(both):
            out.append(f"node {nid}: children overlap")
        if not np.array_equal(np.sort(both), np.sort(idx)):
            out.append(f"node {nid}: children do not partition the parent")
        if node.count != l.count + r.count:
            out.append(f"node {nid}: count {node.count} != {l.count} + {r.count}")
        weighted = (l.count * l.centroid + r.count * r.centroid) / node.count
        if np.linalg.norm(node.centroid - weighted) > 1e-9 * (1 + np.linalg.norm(node.centroid)):
            out.append(f"node {nid}: centroid inconsistent with children")
    if np.any(leaf_seen != 1):
        bad = np.flatnonzero(leaf_seen != 1)[:5].tolist()
        out.append(f"points not in exactly one leaf: {bad}")
    for node in root.walk():
        if len(node.indices):
            true_c = X[node.indices].mean(axis=0)
            if np.linalg.norm(node.centroid - true_c) > 1e-9 * (1 + np.linalg.norm(true_c)):
                out.append(f"node {node.node_id}: centroid differs from the owned points' mean")
    return diag


def tree_stats_rows(root: TreeNode) -> list[tuple[int, int, int, float, bool]]:
    """(node id, depth, count, radius, leaf) rows in preorder."""
    return [(n.node_id, d, n.count, n.radius, n.is_leaf) for n, d in root.walk_depth()]
