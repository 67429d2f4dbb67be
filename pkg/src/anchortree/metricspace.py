"""Points, datasets, the Euclidean metric and distance-computation counting.

Every metric evaluation in the package goes through the kernels in this
module so that results are bit-reproducible: squared differences are summed
in ascending coordinate order with plain sequential addition, never numpy's
pairwise reduction. A distance computed for one pair is therefore bitwise
identical to the same pair computed inside a large vectorized batch, which is
what lets the tree-accelerated algorithms reproduce the brute-force ones
exactly (same argmin, same tie-breaks).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# Elements per chunk for batched kernels; bounds peak temporary memory.
_CHUNK_ELEMENTS = 1 << 22


class DimensionMismatchError(ValueError):
    """Raised when two points or point sets have different dimensions."""


class CSVFormatError(ValueError):
    """Raised when a CSV input cannot be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class DistanceCounter:
    """Tally of metric evaluations for one experiment."""

    count: int = 0

    def add(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("distance counts only increase")
        self.count += int(n)

    def __iadd__(self, other: "DistanceCounter") -> "DistanceCounter":
        self.count += other.count
        return self


class Dataset:
    """Immutable ``R x M`` array of finite reals; row ``i`` is the point with id ``i``."""

    def __init__(self, points: Sequence[Sequence[float]] | np.ndarray) -> None:
        arr = np.array(points, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            raise DimensionMismatchError("points must be a 2-d array (R x M)")
        if arr.ndim != 2:
            raise DimensionMismatchError(f"expected 2-d array, got {arr.ndim}-d")
        if arr.shape[0] < 1:
            raise ValueError("a dataset needs at least one point")
        if arr.shape[1] < 1:
            raise ValueError("points need dimension >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("all coordinates must be finite")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def R(self) -> int:
        return self._points.shape[0]

    @property
    def M(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self.R

    def __getitem__(self, i) -> np.ndarray:
        return self._points[i]

    def __repr__(self) -> str:
        return f"Dataset(R={self.R}, M={self.M})"

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        return cls(read_csv(path))

    def to_csv(self, path: str | Path, header: Sequence[str] | None = None) -> None:
        write_csv(path, self._points, header=header)


def _as_points(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        raise DimensionMismatchError("a point needs at least one coordinate")
    return arr


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}"
        )


def _loop_pays(rows: int, m: int) -> bool:
    # the per-coordinate loop wins once each step touches enough elements
    return m <= 4 or rows >= 2048


def _seq_sqdist(diff: np.ndarray) -> np.ndarray:
    """Sum ``diff**2`` over the last axis, sequentially in ascending index order."""
    m = diff.shape[-1]
    if _loop_pays(diff.size // max(m, 1), m):
        # one coordinate at a time; 0.0 + x == x, so this matches a plain running sum
        acc = np.zeros(diff.shape[:-1])
        for j in range(m):
            t = diff[..., j]
            acc += t * t
        return acc
    sq = diff * diff
    lead = sq.shape[:-1]
    flat = sq.reshape(-1, m)
    n = flat.shape[0]
    if n == 1:
        # a single row would be reduced contiguously (pairwise); pad to keep the
        # strided, sequential reduction path
        flat = np.concatenate([flat, flat])
    out = np.ascontiguousarray(flat.T).sum(axis=0)[:n]
    return out.reshape(lead)


def _pair_sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # same accumulation order as _seq_sqdist without materialising A - B in 3-d
    acc = np.zeros((A.shape[0], B.shape[0]))
    for j in range(A.shape[1]):
        t = A[:, j, None] - B[None, :, j]
        t *= t
        acc += t
    return acc


def sq_distances(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Squared distances from each row of ``X`` to ``y``. Uncounted; internal use."""
    X = np.atleast_2d(X)
    n, m = X.shape
    step = max(1, _CHUNK_ELEMENTS // max(m, 1))
    if n <= step:
        return _seq_sqdist(X - y)
    return np.concatenate([_seq_sqdist(X[i:i + step] - y) for i in range(0, n, step)])


def distance(a, b, counter: DistanceCounter) -> float:
    """Euclidean distance between two points; one counted evaluation."""
    a = _as_points(a)
    b = _as_points(b)
    if a.ndim != 1 or b.ndim != 1:
        raise DimensionMismatchError("distance() takes two single points")
    _check_dims(a, b)
    counter.add(1)
    return math.sqrt(float(_seq_sqdist((a - b)[None, :])[0]))


def distances(X, y, counter: DistanceCounter) -> np.ndarray:
    """Distances from every row of ``X`` to ``y``; counts ``len(X)`` evaluations."""
    X = _as_points(X)
    y = _as_points(y)
    X = np.atleast_2d(X)
    _check_dims(X, y)
    counter.add(X.shape[0])
    return np.sqrt(sq_distances(X, y))


def pairwise_distances(A, B, counter: DistanceCounter) -> np.ndarray:
    """``len(A) x len(B)`` distance matrix; counts every entry."""
    A = np.atleast_2d(_as_points(A))
    B = np.atleast_2d(_as_points(B))
    _check_dims(A, B)
    nA, m = A.shape
    nB = B.shape[0]
    counter.add(nA * nB)
    step = max(1, _CHUNK_ELEMENTS // max(nB, 1))
    out = np.empty((nA, nB))
    for i in range(0, nA, step):
        blk = A[i:i + step]
        if _loop_pays(len(blk) * nB, m):
            out[i:i + step] = _pair_sqdist(blk, B)
        else:
            out[i:i + step] = _seq_sqdist(blk[:, None, :] - B[None, :, :])
    return np.sqrt(out)


def vector_sum(points) -> np.ndarray:
    """Coordinate-wise total, accumulated row by row in index order."""
    P = np.atleast_2d(_as_points(points))
    if P.shape[0] == 0:
        raise ValueError("cannot sum an empty collection of points")
    if P.shape[0] == 1:
        return P[0].copy()
    # axis-0 reduction of a C-contiguous array is a strided sequential sum
    return np.ascontiguousarray(P).sum(axis=0)


def centroid(points) -> np.ndarray:
    """Arithmetic mean of a nonempty collection of points. Never counted."""
    P = np.atleast_2d(_as_points(points))
    if P.shape[0] == 0:
        raise ValueError("centroid of an empty collection is undefined")
    return vector_sum(P) / P.shape[0]


def read_csv(path: str | Path) -> np.ndarray:
    """Parse a numeric CSV. A non-numeric first line is treated as a header."""
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                if lineno == 1:
                    continue
                raise CSVFormatError(lineno, f"non-numeric value in {row!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise CSVFormatError(lineno, "non-finite value")
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise CSVFormatError(
                    lineno, f"expected {width} columns, found {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise CSVFormatError(1, "no data rows")
    return np.array(rows, dtype=np.float64)


def write_csv(path: str | Path, points: np.ndarray, header: Iterable[str] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(list(header))
        for row in np.asarray(points):
            w.writerow([repr(float(v)) for v in row])
