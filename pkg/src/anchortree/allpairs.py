"""All pairs of attributes whose Pearson correlation is at least ``rho_min``.

Columns are centred and scaled to unit Euclidean norm, which makes
``rho(x, y) = 1 - D(x*, y*)**2 / 2``. Correlation above ``rho_min`` is then
distance at most ``sqrt(2 - 2 rho_min)``, and the pairs are collected by a
dual-tree recursion over a metric tree built on the normalised columns.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .metricspace import Dataset, DistanceCounter, distance, distances, pairwise_distances
from .tree import BuildConfig, MetricTree, TreeNode, build_tree

# Absolute guard band on the whole-pair rules (unit vectors: distances <= 2).
PAIR_GUARD = 1e-12


@dataclass
class NormalizedAttributes:
    points: Dataset
    kept: np.ndarray
    dropped: list[int] = field(default_factory=list)

    @property
    def n_attributes(self) -> int:
        return self.points.R


@dataclass
class CorrelatedPairSet:
    """Pairs ``(i, j)`` with ``i < j`` in original column numbering, mapped to rho."""

    pairs: dict[tuple[int, int], float]
    rho_min: float
    emitted_wholesale: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def keys(self) -> set[tuple[int, int]]:
        return set(self.pairs)

    def sorted_rows(self) -> list[tuple[int, int, float]]:
        """Rows ``(i, j, rho)`` by descending rho, then ascending indices."""
        return sorted(((i, j, r) for (i, j), r in self.pairs.items()), key=lambda t: (-t[2], t[0], t[1]))


def normalize_attributes(matrix) -> NormalizedAttributes:
    """Centre each column and scale it to unit norm; constant columns are dropped."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a 2-d records x attributes matrix")
    if m.shape[0] < 2:
        raise ValueError("need at least two records to correlate attributes")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    constant = np.all(m == m[0], axis=0)
    dropped = np.flatnonzero(constant).tolist()
    if dropped:
        warnings.warn(f"dropping {len(dropped)} constant attribute(s): {dropped}", stacklevel=2)
    kept = np.flatnonzero(~constant)
    if len(kept) == 0:
        raise ValueError("every attribute is constant")
    cols = m[:, kept]
    centred = cols - cols.mean(axis=0)
    norms = np.sqrt(np.sum(centred * centred, axis=0))
    unit = (centred / norms).T
    return NormalizedAttributes(points=Dataset(unit), kept=kept, dropped=dropped)


def correlation_threshold_to_distance(rho: float) -> float:
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation threshold {rho} outside [-1, 1]")
    return math.sqrt(max(0.0, 2.0 - 2.0 * rho))


def _rho(U: np.ndarray, a: int, b: int) -> float:
    return float(np.dot(U[a], U[b]))


def _finish(norm: NormalizedAttributes, rows: list[tuple[int, int]], rho_min: float, wholesale: int) -> CorrelatedPairSet:
    U = norm.points.points
    kept = norm.kept
    pairs = {}
    for a, b in rows:
        i, j = int(kept[a]), int(kept[b])
        if i > j:
            i, j = j, i
        pairs[(i, j)] = _rho(U, a, b)
    return CorrelatedPairSet(pairs=pairs, rho_min=rho_min, emitted_wholesale=wholesale)


def brute_force_pairs(norm: NormalizedAttributes, rho_min: float, counter: DistanceCounter) -> CorrelatedPairSet:
    """Exhaustive scan of all M(M-1)/2 attribute pairs."""
    U = norm.points.points
    n = len(U)
    if n < 2:
        raise ValueError("need at least two attributes")
    dmax = correlation_threshold_to_distance(rho_min)
    rows = []
    for a in range(n - 1):
        d = distances(U[a + 1:], U[a], counter)
        rows.extend((a, a + 1 + int(b)) for b in np.flatnonzero(d <= dmax))
    return _finish(norm, rows, rho_min, 0)


def find_correlated_pairs(
    norm: NormalizedAttributes,
    rho_min: float,
    cfg: BuildConfig | None = None,
    counter: DistanceCounter | None = None,
    tree: MetricTree | None = None,
    debug: bool = False,
) -> CorrelatedPairSet:
    """Dual-tree search for every attribute pair with correlation >= ``rho_min``.

    The tree is built over the normalised columns unless one is supplied;
    build cost is not charged to ``counter`` (see ``tree.build_distance_count``).
    With ``debug=True`` every wholesale emission is re-checked pair by pair.
    """
    counter = counter if counter is not None else DistanceCounter()
    if norm.n_attributes < 2:
        raise ValueError("need at least two attributes")
    if tree is None:
        tree = build_tree(norm.points, cfg or BuildConfig())
    U = norm.points.points
    dmax = correlation_threshold_to_distance(rho_min)
    rows: list[tuple[int, int]] = []
    wholesale = 0

    def emit_within(node: TreeNode) -> None:
        nonlocal wholesale
        new = list(itertools.combinations(node.indices.tolist(), 2))
        wholesale += len(new)
        rows.extend(new)
        if debug:
            _check_emitted(U, new, dmax)

    def emit_cross(a: TreeNode, b: TreeNode) -> None:
        nonlocal wholesale
        new = list(itertools.product(a.indices.tolist(), b.indices.tolist()))
        wholesale += len(new)
        rows.extend(new)
        if debug:
            _check_emitted(U, new, dmax)

    def self_pairs(node: TreeNode) -> None:
        if 2.0 * node.radius + PAIR_GUARD <= dmax:
            emit_within(node)
            return
        if node.is_leaf:
            idx = node.indices
            for t in range(len(idx) - 1):
                d = distances(U[idx[t + 1:]], U[idx[t]], counter)
                rows.extend((int(idx[t]), int(idx[t + 1 + s])) for s in np.flatnonzero(d <= dmax))
            return
        self_pairs(node.left)
        self_pairs(node.right)
        cross_pairs(node.left, node.right)

    def cross_pairs(a: TreeNode, b: TreeNode) -> None:
        d = distance(a.pivot, b.pivot, counter)
        if d - a.radius - b.radius > dmax + PAIR_GUARD:
            return
        if d + a.radius + b.radius + PAIR_GUARD <= dmax:
            emit_cross(a, b)
            return
        if a.is_leaf and b.is_leaf:
            D = pairwise_distances(U[a.indices], U[b.indices], counter)
            ia, ib = np.nonzero(D <= dmax)
            rows.extend(zip(a.indices[ia].tolist(), b.indices[ib].tolist()))
            return
        if b.is_leaf or (not a.is_leaf and a.radius >= b.radius):
            cross_pairs(a.left, b)
            cross_pairs(a.right, b)
        else:
            cross_pairs(a, b.left)
            cross_pairs(a, b.right)

    self_pairs(tree.root)
    return _finish(norm, rows, rho_min, wholesale)


def _check_emitted(U: np.ndarray, pairs: list[tuple[int, int]], dmax: float) -> None:
    scratch = DistanceCounter()
    for a, b in pairs:
        if distance(U[a], U[b], scratch) > dmax:
            raise AssertionError(f"wholesale emission of non-qualifying pair ({a}, {b})")
