"""Regular-vs-fast experiments and the builder/initialisation comparisons.

Every experiment runs the treeless baseline and the tree-accelerated method
on the same input, refuses to report if their outputs disagree, and records
both distance counts. Tree construction cost is kept in its own field and is
only folded into the fast count on request.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from .allpairs import CorrelatedPairSet, brute_force_pairs, find_correlated_pairs, normalize_attributes
from .anomaly import anomaly_verdicts, brute_force_verdicts, calibrate_threshold
from .kmeans import KmeansResult, anchors_init, random_init, run_kmeans
from .metricspace import Dataset, DistanceCounter
from .tree import BuildConfig, build_tree

TRACE_RTOL = 1e-9
RHO_ATOL = 1e-9

BUILDER_NAMES = {"anchors": "middle_out", "topdown": "top_down"}


class MismatchError(RuntimeError):
    """Regular and fast implementations disagreed."""


@dataclass
class ExperimentReport:
    dataset: str
    algorithm: str
    builder: str
    regular_distance_count: int
    fast_distance_count: int
    build_distance_count: int
    fold_build_cost: bool = False
    params: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def effective_fast_count(self) -> int:
        extra = self.build_distance_count if self.fold_build_cost else 0
        return self.fast_distance_count + extra

    @property
    def speedup(self) -> float:
        fast = self.effective_fast_count
        return float("inf") if fast == 0 else self.regular_distance_count / fast

    def as_dict(self) -> dict:
        d = asdict(self)
        d["speedup"] = self.speedup
        return d

    def flat(self) -> dict:
        row = {
            "dataset": self.dataset,
            "algorithm": self.algorithm,
            "builder": self.builder,
            "regular_distance_count": self.regular_distance_count,
            "fast_distance_count": self.fast_distance_count,
            "build_distance_count": self.build_distance_count,
            "fold_build_cost": self.fold_build_cost,
            "speedup": self.speedup,
        }
        row.update({f"param_{k}": v for k, v in self.params.items()})
        row.update({f"out_{k}": v for k, v in self.outputs.items()})
        row["wall_time"] = self.wall_time
        return row


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_tsv(rows: list[dict]) -> str:
    header = list(rows[0])
    for r in rows[1:]:
        header.extend(k for k in r if k not in header)
    lines = ["\t".join(header)]
    lines += ["\t".join(_fmt(r.get(k, "")) for k in header) for r in rows]
    return "\n".join(lines) + "\n"


def format_json(objs: list[dict]) -> str:
    return "\n".join(json.dumps(o, sort_keys=False, default=_json_default) for o in objs) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


@dataclass
class ExperimentConfig:
    algorithm: Literal["kmeans", "anomaly", "allpairs"]
    data: Dataset
    dataset: str = "data"
    builder: str = "anchors"
    r_min: int = 30
    seed: int = 0
    exact_radius: bool = True
    fold_build_cost: bool = False
    threads: int = 1
    # kmeans
    K: int = 3
    init: str = "random"
    max_iters: int = 50
    # anomaly
    range: float | None = None
    threshold: int | None = None
    calibrate_fraction: float | None = None
    queries: np.ndarray | None = None
    # allpairs
    rho_min: float = 0.5

    def build_config(self) -> BuildConfig:
        return BuildConfig(r_min=self.r_min, builder=BUILDER_NAMES[self.builder],
                           seed=self.seed, exact_radius=self.exact_radius)


@dataclass
class ExperimentResult:
    report: ExperimentReport
    fast: KmeansResult | np.ndarray | CorrelatedPairSet | None = None
    regular: KmeansResult | np.ndarray | CorrelatedPairSet | None = None


def _initial_centroids(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.init == "random":
        return random_init(cfg.data, cfg.K, cfg.seed)
    if cfg.init == "anchors":
        return anchors_init(cfg.data, cfg.K, DistanceCounter(), cfg.seed)
    raise ValueError(f"unknown init {cfg.init!r}")


def check_traces(regular: list[float], fast: list[float], rtol: float = TRACE_RTOL) -> None:
    if len(regular) != len(fast):
        raise MismatchError(f"iteration counts differ: regular {len(regular) - 1}, fast {len(fast) - 1}")
    for i, (a, b) in enumerate(zip(regular, fast)):
        if abs(a - b) > rtol * max(abs(a), abs(b), 1e-300):
            raise MismatchError(f"distortion differs at iteration {i}: regular {a!r}, fast {b!r}")


def _kmeans(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    data = cfg.data
    C0 = _initial_centroids(cfg)
    reg_c = DistanceCounter()
    regular = run_kmeans(data, cfg.K, tree=None, init=C0, max_iters=cfg.max_iters, counter=reg_c)
    tree = build_tree(data, cfg.build_config())
    fast_c = DistanceCounter()
    fast = run_kmeans(data, cfg.K, tree=tree, init=C0, max_iters=cfg.max_iters, counter=fast_c)
    check_traces(regular.distortions, fast.distortions)
    report = ExperimentReport(
        dataset=cfg.dataset,
        algorithm="kmeans",
        builder=cfg.builder,
        regular_distance_count=reg_c.count,
        fast_distance_count=fast_c.count,
        build_distance_count=tree.build_distance_count,
        fold_build_cost=cfg.fold_build_cost,
        params={"K": cfg.K, "init": cfg.init, "max_iters": cfg.max_iters, "seed": cfg.seed, "r_min": cfg.r_min},
        outputs={
            "iterations": fast.iterations,
            "start_distortion": fast.start_distortion,
            "final_distortion": fast.final_distortion,
        },
        wall_time=time.perf_counter() - t0,
    )
    return ExperimentResult(report, fast=fast, regular=regular)


def _anomaly(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    data = cfg.data
    if cfg.range is None:
        raise ValueError("anomaly experiments need a range")
    tree = build_tree(data, cfg.build_config())
    threshold = cfg.threshold
    if threshold is None:
        if cfg.calibrate_fraction is None:
            raise ValueError("give a threshold or a calibration fraction")
        threshold = calibrate_threshold(tree, cfg.range, cfg.calibrate_fraction, seed=cfg.seed)
    queries = data.points if cfg.queries is None else np.atleast_2d(cfg.queries)
    if queries.shape[1] != data.M:
        raise ValueError(f"queries have dimension {queries.shape[1]}, data {data.M}")
    reg_c = DistanceCounter()
    regular = brute_force_verdicts(data, queries, cfg.range, threshold, reg_c)
    fast_c = DistanceCounter()
    fast = anomaly_verdicts(tree, queries, cfg.range, threshold, fast_c, threads=cfg.threads)
    if not np.array_equal(regular, fast):
        bad = np.flatnonzero(regular != fast)
        raise MismatchError(f"{len(bad)} anomaly verdicts differ, first at query {bad[0]}")
    report = ExperimentReport(
        dataset=cfg.dataset,
        algorithm="anomaly",
        builder=cfg.builder,
        regular_distance_count=reg_c.count,
        fast_distance_count=fast_c.count,
        build_distance_count=tree.build_distance_count,
        fold_build_cost=cfg.fold_build_cost,
        params={"range": cfg.range, "threshold": threshold, "seed": cfg.seed, "r_min": cfg.r_min},
        outputs={
            "n_queries": len(queries),
            "n_anomalies": int(fast.sum()),
            "anomaly_fraction": float(fast.mean()),
        },
        wall_time=time.perf_counter() - t0,
    )
    return ExperimentResult(report, fast=fast, regular=regular)


def check_pairs(regular: CorrelatedPairSet, fast: CorrelatedPairSet) -> None:
    if regular.keys() != fast.keys():
        only_r = sorted(regular.keys() - fast.keys())[:5]
        only_f = sorted(fast.keys() - regular.keys())[:5]
        raise MismatchError(f"pair sets differ: regular-only {only_r}, fast-only {only_f}")
    for key, rho in regular.pairs.items():
        if abs(rho - fast.pairs[key]) > RHO_ATOL:
            raise MismatchError(f"rho differs for pair {key}")


def _allpairs(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    norm = normalize_attributes(cfg.data.points)
    reg_c = DistanceCounter()
    regular = brute_force_pairs(norm, cfg.rho_min, reg_c)
    tree = build_tree(norm.points, cfg.build_config())
    fast_c = DistanceCounter()
    fast = find_correlated_pairs(norm, cfg.rho_min, counter=fast_c, tree=tree)
    check_pairs(regular, fast)
    report = ExperimentReport(
        dataset=cfg.dataset,
        algorithm="allpairs",
        builder=cfg.builder,
        regular_distance_count=reg_c.count,
        fast_distance_count=fast_c.count,
        build_distance_count=tree.build_distance_count,
        fold_build_cost=cfg.fold_build_cost,
        params={"rho_min": cfg.rho_min, "seed": cfg.seed, "r_min": cfg.r_min},
        outputs={"n_pairs": len(fast), "n_attributes": norm.n_attributes, "n_dropped": len(norm.dropped)},
        wall_time=time.perf_counter() - t0,
    )
    return ExperimentResult(report, fast=fast, regular=regular)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the regular and fast versions of one algorithm and check they agree."""
    if cfg.algorithm == "kmeans":
        return _kmeans(cfg)
    if cfg.algorithm == "anomaly":
        return _anomaly(cfg)
    if cfg.algorithm == "allpairs":
        return _allpairs(cfg)
    raise ValueError(f"unknown algorithm {cfg.algorithm!r}")


@dataclass
class BuilderComparison:
    anchors: ExperimentReport
    topdown: ExperimentReport

    @property
    def ratio(self) -> float:
        """Top-down fast count over anchors fast count (>1 means anchors prune better)."""
        return self.topdown.effective_fast_count / self.anchors.effective_fast_count

    def rows(self) -> list[dict]:
        out = []
        for rep in (self.anchors, self.topdown):
            row = rep.flat()
            row["ratio_topdown_over_anchors"] = self.ratio
            out.append(row)
        return out


def compare_builders(cfg: ExperimentConfig) -> BuilderComparison:
    """Same algorithm, data and initialisation on an anchors-built and a top-down-built tree."""
    results = {}
    for builder in ("anchors", "topdown"):
        sub = ExperimentConfig(**{**cfg.__dict__, "builder": builder})
        results[builder] = run_experiment(sub).report
    return BuilderComparison(results["anchors"], results["topdown"])


@dataclass
class InitComparison:
    dataset: str
    K: int
    random_start: float
    anchors_start: float
    random_end: float
    anchors_end: float

    @property
    def start_benefit(self) -> float:
        return self.random_start / self.anchors_start

    @property
    def end_benefit(self) -> float:
        return self.random_end / self.anchors_end

    def row(self) -> dict:
        return {
            "dataset": self.dataset,
            "K": self.K,
            "random_start": self.random_start,
            "anchors_start": self.anchors_start,
            "random_end": self.random_end,
            "anchors_end": self.anchors_end,
            "start_benefit": self.start_benefit,
            "end_benefit": self.end_benefit,
        }


def compare_inits(
    data: Dataset,
    K: int,
    seed: int = 0,
    iters: int = 50,
    dataset: str = "data",
    build: BuildConfig | None = None,
) -> InitComparison:
    """Distortion before and after ``iters`` K-means iterations, random vs anchors seeds.

    K-means runs on a metric tree; it is exact, so this only affects speed.
    """
    tree = build_tree(data, build or BuildConfig(seed=seed))
    rnd = run_kmeans(data, K, tree=tree, init="random", seed=seed, max_iters=iters)
    anc = run_kmeans(data, K, tree=tree, init="anchors", seed=seed, max_iters=iters)
    return InitComparison(dataset, K, rnd.start_distortion, anc.start_distortion,
                          rnd.final_distortion, anc.final_distortion)
