"""Range-count anomaly test accelerated by a metric tree.

A query is anomalous when fewer than ``threshold`` dataset points lie within
``range`` of it (inclusive). The search keeps a lower bound (points proven
inside) and an upper bound (points not yet ruled out) and stops as soon as
either bound settles the verdict.

A query that is itself a dataset point counts towards its own
neighbourhood; pass ``threshold + 1`` when screening dataset points.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .metricspace import Dataset, DistanceCounter, distance, distances, sq_distances
from .tree import MetricTree, TreeNode

# Relative guard band on the whole-node rules; boundary cases fall through to
# point-by-point checks, which use the same kernel as the brute-force count.
RULE_GUARD = 1e-12


@dataclass(frozen=True)
class AnomalyQuery:
    query_point: np.ndarray
    range: float
    threshold: int

    def __post_init__(self) -> None:
        if not self.range >= 0:
            raise ValueError(f"range must be nonnegative, got {self.range}")
        if self.threshold < 0:
            raise ValueError(f"threshold must be nonnegative, got {self.threshold}")
        object.__setattr__(self, "query_point", np.asarray(self.query_point, dtype=np.float64))


class _Search:
    def __init__(self, tree: MetricTree, q: AnomalyQuery, counter: DistanceCounter,
                 early_exit: bool, debug: bool) -> None:
        self.X = tree.data.points
        self.x = q.query_point
        self.rng = float(q.range)
        self.thr = q.threshold if early_exit else None
        self.counter = counter
        self.confirmed = 0
        self.possible = tree.data.R
        self.true_count = None
        if debug:
            self.true_count = int(np.count_nonzero(np.sqrt(sq_distances(self.X, self.x)) <= self.rng))

    def _sandwich(self) -> None:
        if self.true_count is not None:
            assert self.confirmed <= self.true_count <= self.possible, (
                self.confirmed, self.true_count, self.possible)

    def verdict(self) -> bool | None:
        self._sandwich()
        if self.thr is None:
            return None
        if self.confirmed >= self.thr:
            return False
        if self.possible < self.thr:
            return True
        return None

    def scan_leaf(self, node: TreeNode) -> bool | None:
        d = np.sqrt(sq_distances(self.X[node.indices], self.x))
        inside = d <= self.rng
        if self.thr is not None:
            conf = self.confirmed + np.cumsum(inside)
            poss = self.possible - np.cumsum(~inside)
            hit = np.flatnonzero((conf >= self.thr) | (poss < self.thr))
            if len(hit):
                # a point-by-point scan would have stopped here
                p = int(hit[0])
                self.counter.add(p + 1)
                self.confirmed, self.possible = int(conf[p]), int(poss[p])
                return self.verdict()
        self.counter.add(len(d))
        n_in = int(np.count_nonzero(inside))
        self.confirmed += n_in
        self.possible -= len(d) - n_in
        return self.verdict()

    def visit(self, node: TreeNode, d: float) -> bool | None:
        guard = RULE_GUARD * (d + node.radius + self.rng)
        if d + node.radius <= self.rng - guard:
            self.confirmed += node.count
            return self.verdict()
        if d - node.radius > self.rng + guard:
            self.possible -= node.count
            return self.verdict()
        if node.is_leaf:
            return self.scan_leaf(node)
        dl = distance(self.x, node.left.pivot, self.counter)
        dr = distance(self.x, node.right.pivot, self.counter)
        order = [(node.left, dl), (node.right, dr)] if dl <= dr else [(node.right, dr), (node.left, dl)]
        for child, dc in order:
            v = self.visit(child, dc)
            if v is not None:
                return v
        return None

    def run(self, root: TreeNode) -> bool | None:
        v = self.verdict()
        if v is not None:
            return v
        return self.visit(root, distance(self.x, root.pivot, self.counter))


def is_anomaly(tree: MetricTree, q: AnomalyQuery, counter: DistanceCounter, debug: bool = False) -> bool:
    """True iff fewer than ``q.threshold`` points lie within ``q.range`` of the query."""
    s = _Search(tree, q, counter, early_exit=True, debug=debug)
    v = s.run(tree.root)
    if v is None:
        # search exhausted: confirmed == possible == exact count
        return s.confirmed < q.threshold
    return v


def range_count(tree: MetricTree, point, radius: float, counter: DistanceCounter, debug: bool = False) -> int:
    """Exact number of points within ``radius`` using only the whole-node rules (no early exit)."""
    s = _Search(tree, AnomalyQuery(point, radius, 0), counter, early_exit=False, debug=debug)
    s.run(tree.root)
    assert s.confirmed == s.possible
    return s.confirmed


def brute_force_range_count(data: Dataset, q: AnomalyQuery, counter: DistanceCounter) -> int:
    """Linear scan; costs exactly R distances."""
    return int(np.count_nonzero(distances(data.points, q.query_point, counter) <= q.range))


def anomaly_verdicts(
    tree: MetricTree,
    queries: np.ndarray,
    radius: float,
    threshold: int,
    counter: DistanceCounter,
    threads: int = 1,
) -> np.ndarray:
    """Verdicts for many queries; workers keep private counters summed at the end."""
    queries = np.atleast_2d(queries)

    def work(rows: range) -> tuple[list[bool], int]:
        local = DistanceCounter()
        out = [is_anomaly(tree, AnomalyQuery(queries[i], radius, threshold), local) for i in rows]
        return out, local.count

    if threads <= 1 or len(queries) < 2:
        verdicts, used = work(range(len(queries)))
        counter.add(used)
        return np.array(verdicts, dtype=bool)
    size = math.ceil(len(queries) / threads)
    chunks = [range(i, min(i + size, len(queries))) for i in range(0, len(queries), size)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(work, chunks))
    verdicts = [v for part, _ in results for v in part]
    counter.add(sum(used for _, used in results))
    return np.array(verdicts, dtype=bool)


def brute_force_verdicts(data: Dataset, queries: np.ndarray, radius: float, threshold: int,
                         counter: DistanceCounter) -> np.ndarray:
    queries = np.atleast_2d(queries)
    return np.array([
        brute_force_range_count(data, AnomalyQuery(qp, radius, threshold), counter) < threshold
        for qp in queries
    ], dtype=bool)


def calibrate_threshold(
    tree: MetricTree,
    radius: float,
    target_fraction: float = 0.1,
    sample: int = 500,
    seed: int = 0,
) -> int:
    """Threshold under which roughly ``target_fraction`` of dataset points are anomalous.

    Exact range counts are taken for a random sample of dataset points; the
    result counts the query point itself, matching :func:`is_anomaly`.
    """
    if not 0 < target_fraction < 1:
        raise ValueError("target_fraction must be in (0, 1)")
    data = tree.data
    rng = np.random.default_rng(seed)
    idx = rng.choice(data.R, size=min(sample, data.R), replace=False)
    scratch = DistanceCounter()
    counts = np.sort([range_count(tree, data.points[i], radius, scratch) for i in idx])
    # smallest threshold t with mean(counts < t) >= target
    k = math.ceil(target_fraction * len(counts))
    return int(counts[k - 1]) + 1
