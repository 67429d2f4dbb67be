"""Seeded synthetic datasets.

All randomness comes from numpy's ``PCG64`` bit generator via
``np.random.default_rng(seed)``, so outputs are pure functions of the
parameters and the seed.

* ``squiggles``: 2-d points blurred around a few random sinusoidal arcs.
* ``filaments``: 2-d points scattered around random segments between sites.
* ``sparse_mixture``: binary vectors copied from sparse random prototypes
  with independent bit flips.
* ``two_class_binary``: two classes of binary vectors that differ only on
  the first fifth of the attributes (1 w.p. 1/3 vs 2/3; the rest 1 w.p. 1/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .metricspace import Dataset

Kind = Literal["squiggles", "filaments", "sparse_mixture", "two_class_binary"]


@dataclass
class GenSpec:
    kind: Kind
    R: int
    M: int = 2
    k: int = 1
    seed: int = 0
    sparsity: float = 0.1
    flip: float = 0.01

    def __post_init__(self) -> None:
        if self.kind not in ("squiggles", "filaments", "sparse_mixture", "two_class_binary"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.R < 1 or self.M < 1 or self.k < 1:
            raise ValueError("R, M and k must all be >= 1")


@dataclass
class Generated:
    data: Dataset
    labels: np.ndarray
    structure: dict = field(default_factory=dict)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def gen_two_class_binary(R: int, M: int, seed: int = 0) -> Generated:
    """First half class A (label 0), second half class B (label 1)."""
    if M < 2:
        raise ValueError("two_class_binary needs M >= 2")
    if R < 2 or R % 2:
        raise ValueError("two_class_binary needs an even R >= 2")
    rng = _rng(seed)
    half = R // 2
    informative = M // 5
    X = (rng.random((R, M)) < 0.5).astype(np.float64)
    X[:half, :informative] = rng.random((half, informative)) < 1.0 / 3.0
    X[half:, :informative] = rng.random((half, informative)) < 2.0 / 3.0
    labels = np.repeat([0, 1], half)
    return Generated(Dataset(X), labels, {"informative": informative})


def squiggle_curve(params: dict, t: np.ndarray) -> np.ndarray:
    """Points on one generating arc at parameters ``t`` in [0, 1]."""
    start = np.asarray(params["start"])
    u = np.array([np.cos(params["angle"]), np.sin(params["angle"])])
    v = np.array([-u[1], u[0]])
    wave = params["amplitude"] * np.sin(2 * np.pi * params["frequency"] * t + params["phase"])
    return start + np.outer(t * params["length"], u) + np.outer(wave, v)


def gen_squiggles(R: int, seed: int = 0, n_curves: int = 5, blur: float = 0.01) -> Generated:
    """Points along ``n_curves`` random sinusoidal arcs with isotropic Gaussian blur.

    The blur scale of each arc is ``blur`` times its bounding-box diagonal.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    rng = _rng(seed)
    curves = []
    dense_t = np.linspace(0.0, 1.0, 2001)
    for _ in range(n_curves):
        params = {
            "start": rng.uniform(10.0, 90.0, size=2).tolist(),
            "angle": float(rng.uniform(0.0, 2 * np.pi)),
            "length": float(rng.uniform(30.0, 60.0)),
            "amplitude": float(rng.uniform(3.0, 10.0)),
            "frequency": float(rng.uniform(0.5, 2.0)),
            "phase": float(rng.uniform(0.0, 2 * np.pi)),
        }
        dense = squiggle_curve(params, dense_t)
        params["sigma"] = float(blur * np.linalg.norm(dense.max(axis=0) - dense.min(axis=0)))
        curves.append(params)
    labels = rng.integers(n_curves, size=R)
    t = rng.random(R)
    X = np.empty((R, 2))
    for c, params in enumerate(curves):
        sel = labels == c
        X[sel] = squiggle_curve(params, t[sel])
    sigma = np.array([curves[c]["sigma"] for c in labels])
    X += rng.normal(size=(R, 2)) * sigma[:, None]
    return Generated(Dataset(X), labels, {"curves": curves})


def gen_filaments(R: int, seed: int = 0, n_segments: int = 10, n_sites: int = 8, noise: float = 0.01) -> Generated:
    """Points scattered along ``n_segments`` segments joining random sites.

    The noise scale is ``noise`` times the diagonal of the sites' bounding box.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    rng = _rng(seed)
    sites = rng.uniform(0.0, 100.0, size=(n_sites, 2))
    all_pairs = [(a, b) for a in range(n_sites) for b in range(a + 1, n_sites)]
    chosen = rng.choice(len(all_pairs), size=min(n_segments, len(all_pairs)), replace=False)
    segments = np.array([[sites[all_pairs[c][0]], sites[all_pairs[c][1]]] for c in chosen])
    sigma = float(noise * np.linalg.norm(sites.max(axis=0) - sites.min(axis=0)))
    labels = rng.integers(len(segments), size=R)
    t = rng.random(R)[:, None]
    a, b = segments[labels, 0], segments[labels, 1]
    X = a + t * (b - a) + rng.normal(size=(R, 2)) * sigma
    return Generated(Dataset(X), labels, {"segments": segments, "sigma": sigma})


def gen_sparse_mixture(R: int, M: int, k: int, seed: int = 0, sparsity: float = 0.1, flip: float = 0.01) -> Generated:
    """Binary points copied from ``k`` random prototypes with independent flips."""
    if k > R:
        raise ValueError(f"k={k} exceeds R={R}")
    rng = _rng(seed)
    prototypes = (rng.random((k, M)) < sparsity).astype(np.float64)
    labels = rng.integers(k, size=R)
    X = prototypes[labels].copy()
    flips = rng.random((R, M)) < flip
    X[flips] = 1.0 - X[flips]
    return Generated(Dataset(X), labels, {"prototypes": prototypes})


def generate(spec: GenSpec) -> Generated:
    if spec.kind == "squiggles":
        return gen_squiggles(spec.R, spec.seed)
    if spec.kind == "filaments":
        return gen_filaments(spec.R, spec.seed)
    if spec.kind == "sparse_mixture":
        return gen_sparse_mixture(spec.R, spec.M, spec.k, spec.seed, spec.sparsity, spec.flip)
    return gen_two_class_binary(spec.R, spec.M, spec.seed)
