"""The anchors hierarchy: a tree-free partition of the data among k pivots.

Each anchor keeps its owned points sorted by decreasing cached distance to
its pivot, so its radius is the head of the list. New anchors are placed at
the furthest owned point of the widest anchor and steal points from every
existing anchor; a scan over an existing anchor's list stops as soon as a
cached distance drops strictly below half the pivot-to-pivot distance,
because no later point can be closer to the new pivot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metricspace import Dataset, DistanceCounter, centroid, distances, sq_distances


class AnchorSaturationError(RuntimeError):
    """No anchor owns a point that could serve as a new pivot."""


def _sort_owned(idx: np.ndarray, dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # nonincreasing distance, ties by ascending point index
    order = np.lexsort((idx, -dist))
    return idx[order], dist[order]


@dataclass(eq=False)
class Anchor:
    pivot_index: int
    indices: np.ndarray
    dists: np.ndarray

    @property
    def radius(self) -> float:
        return float(self.dists[0]) if len(self.dists) else 0.0

    @property
    def owned(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.dists.tolist()))

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(eq=False)
class AnchorSet:
    data: Dataset
    anchors: list[Anchor] = field(default_factory=list)
    # pivot-to-pivot distances, grown one row/column per added anchor
    inter: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    _owner: dict[int, int] = field(default_factory=dict, repr=False)

    @property
    def k(self) -> int:
        return len(self.anchors)

    def __len__(self) -> int:
        return len(self.anchors)

    def owner_of(self, point_index: int) -> int:
        return self._owner[point_index]

    def pivots(self) -> list[int]:
        return [a.pivot_index for a in self.anchors]

    def labels(self) -> dict[int, int]:
        """Map from point index to the index of the anchor owning it."""
        return dict(self._owner)


def _initial_set(data: Dataset, subset: np.ndarray, pivot: int, counter: DistanceCounter) -> AnchorSet:
    d = distances(data.points[subset], data.points[pivot], counter)
    idx, dist = _sort_owned(subset.astype(np.int64), d)
    aset = AnchorSet(data=data, anchors=[Anchor(pivot, idx, dist)], inter=np.zeros((1, 1)))
    aset._owner = {int(i): 0 for i in idx}
    return aset


def choose_next_anchor(aset: AnchorSet) -> int:
    """Furthest owned point of the widest anchor. Costs no distance computations.

    Among equal radii the lowest anchor index wins. The anchor's own pivot is
    skipped (it can only be the head when the radius is zero).
    """
    best, best_r = -1, -1.0
    for i, a in enumerate(aset.anchors):
        if len(a) < 2:
            continue
        if a.radius > best_r:
            best, best_r = i, a.radius
    if best < 0:
        raise AnchorSaturationError("every anchor owns at most one point")
    a = aset.anchors[best]
    for p in a.indices:
        if p != a.pivot_index:
            return int(p)
    raise AnchorSaturationError("widest anchor owns only its pivot")  # pragma: no cover


def add_anchor(
    aset: AnchorSet,
    new_pivot_index: int,
    counter: DistanceCounter,
    use_cutoff: bool = True,
) -> AnchorSet:
    """Add an anchor at ``new_pivot_index`` and let it steal points.

    The set is updated in place and returned. ``use_cutoff=False`` disables
    the early termination and examines every owned point; the resulting
    ownership is identical, only the distance count differs.
    """
    p = int(new_pivot_index)
    if p in aset.pivots():
        raise ValueError(f"point {p} is already an anchor pivot")
    if p not in aset._owner:
        raise ValueError(f"point {p} is not owned by any anchor")

    X = aset.data.points
    pvec = X[p]
    k = aset.k
    to_old = distances(X[aset.pivots()], pvec, counter)

    # the new pivot always owns itself, at distance zero
    src = aset.anchors[aset._owner[p]]
    keep = src.indices != p
    src.indices, src.dists = src.indices[keep], src.dists[keep]

    stolen_idx = [np.array([p], dtype=np.int64)]
    stolen_dist = [np.zeros(1)]
    for i, a in enumerate(aset.anchors):
        if not len(a):
            continue
        if use_cutoff:
            half = to_old[i] / 2.0
            # entries strictly below the cutoff end the scan
            stop = int(np.count_nonzero(a.dists >= half))
        else:
            stop = len(a)
        if stop == 0:
            continue
        head = a.indices[:stop]
        d_new = distances(X[head], pvec, counter)
        moved = d_new < a.dists[:stop]
        if not moved.any():
            continue
        stolen_idx.append(head[moved])
        stolen_dist.append(d_new[moved])
        keep = np.ones(len(a), dtype=bool)
        keep[:stop][moved] = False
        a.indices, a.dists = a.indices[keep], a.dists[keep]

    idx, dist = _sort_owned(np.concatenate(stolen_idx), np.concatenate(stolen_dist))
    aset.anchors.append(Anchor(p, idx, dist))
    for q in idx.tolist():
        aset._owner[q] = k

    inter = np.zeros((k + 1, k + 1))
    inter[:k, :k] = aset.inter
    inter[k, :k] = to_old
    inter[:k, k] = to_old
    aset.inter = inter
    return aset


def build_anchors(
    data: Dataset,
    k: int,
    counter: DistanceCounter,
    seed: int | np.random.Generator = 0,
    subset=None,
    use_cutoff: bool = True,
    first_pivot: int | None = None,
) -> AnchorSet:
    """Build ``k`` anchors over ``data`` (or over the indices in ``subset``).

    The first pivot is drawn uniformly from the points using ``seed`` unless
    ``first_pivot`` names it; the rest come from :func:`choose_next_anchor`.
    """
    subset = np.arange(data.R) if subset is None else np.asarray(subset, dtype=np.int64)
    n = len(subset)
    if n == 0:
        raise ValueError("cannot build anchors over an empty subset")
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if first_pivot is None:
        first = int(subset[rng.integers(n)])
    elif first_pivot in set(subset.tolist()):
        first = int(first_pivot)
    else:
        raise ValueError(f"first_pivot {first_pivot} is not in the point set")
    aset = _initial_set(data, subset, first, counter)
    while aset.k < k:
        add_anchor(aset, choose_next_anchor(aset), counter, use_cutoff=use_cutoff)
    return aset


def anchors_as_seed_centroids(aset: AnchorSet) -> np.ndarray:
    """One seed per anchor: the centroid of what it owns (its pivot if it owns nothing)."""
    X = aset.data.points
    seeds = []
    for a in aset.anchors:
        seeds.append(centroid(X[a.indices]) if len(a) else X[a.pivot_index].copy())
    return np.array(seeds)


def validate_anchors(aset: AnchorSet, subset=None) -> list[str]:
    """Exhaustively check partition, sortedness, cached distances and nearest-anchor ownership."""
    problems: list[str] = []
    X = aset.data.points
    expected = set(range(aset.data.R)) if subset is None else set(int(i) for i in subset)
    seen: dict[int, int] = {}
    for i, a in enumerate(aset.anchors):
        for q in a.indices.tolist():
            if q in seen:
                problems.append(f"point {q} owned by anchors {seen[q]} and {i}")
            seen[q] = i
        if np.any(np.diff(a.dists) > 0):
            problems.append(f"anchor {i}: owned list not sorted")
        if len(a):
            exact = np.sqrt(sq_distances(X[a.indices], X[a.pivot_index]))
            if not np.array_equal(exact, a.dists):
                problems.append(f"anchor {i}: cached distances differ from the metric")
    if set(seen) != expected:
        problems.append("ownership does not cover the point set exactly")

    piv = X[aset.pivots()]
    k = aset.k
    full = np.sqrt(np.stack([sq_distances(piv, piv[j]) for j in range(k)], axis=1))
    if not np.array_equal(full, aset.inter):
        problems.append("inter-anchor distance table is stale")
    if seen:
        pts = np.array(sorted(seen))
        D = np.sqrt(np.stack([sq_distances(X[pts], piv[j]) for j in range(k)], axis=1))
        own = np.array([seen[q] for q in pts.tolist()])
        mine = D[np.arange(len(pts)), own]
        bad = np.flatnonzero(mine > D.min(axis=1))
        for b in bad[:10]:
            problems.append(f"point {pts[b]} is not owned by a nearest anchor")
    return problems
