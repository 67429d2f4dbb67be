"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed in the pytest terminal summary)
before asserting, so a run always reports every criterion.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import itertools
import math

import numpy as np
import pytest

from anchortree.allpairs import brute_force_pairs, find_correlated_pairs, normalize_attributes
from anchortree.anchors import build_anchors, validate_anchors
from anchortree.anomaly import anomaly_verdicts, brute_force_verdicts
from anchortree.datagen import gen_sparse_mixture, gen_squiggles, gen_two_class_binary
from anchortree.experiments import ExperimentConfig, compare_builders, compare_inits
from anchortree.kmeans import fast_kmeans_step, naive_kmeans_step, random_init, run_kmeans
from anchortree.metricspace import Dataset, DistanceCounter
from anchortree.tree import BuildConfig, build_top_down, build_tree, tree_stats_rows, validate_tree

from conftest import clustered

pytestmark = pytest.mark.slow

BUILDERS = ("middle_out", "top_down")


def rel_close(a, b, rtol):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return bool(np.all(np.abs(a - b) <= rtol * np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)))


def test_criterion_1_kmeans_exactness(record_criterion):
    grid = list(itertools.product([2, 10, 50], [3, 20]))
    worst_sum, count_mismatch, trace_mismatch = 0.0, 0, 0
    for inst in range(25):
        M, K = grid[inst % len(grid)]
        rng = np.random.default_rng(1000 + inst)
        X = clustered(rng, 2000, M) if inst % 2 else rng.normal(size=(2000, M))
        data = Dataset(X)
        trees = [build_tree(data, BuildConfig(builder=b, seed=inst)) for b in BUILDERS]
        C0 = random_init(data, K, inst)
        C = C0
        for _ in range(50):
            ref = naive_kmeans_step(data, C, DistanceCounter())
            for t in trees:
                got = fast_kmeans_step(t, C, DistanceCounter())
                count_mismatch += int(not np.array_equal(got.counts, ref.counts))
                scale = np.maximum(np.abs(ref.sums), np.abs(got.sums))
                err = np.abs(got.sums - ref.sums) / np.maximum(scale, 1e-300)
                worst_sum = max(worst_sum, float(err[scale > 0].max(initial=0.0)))
            C = ref.next_centroids(C)
        naive = run_kmeans(data, K, init=C0, max_iters=50)
        for t in trees:
            fast = run_kmeans(data, K, tree=t, init=C0, max_iters=50)
            same = len(fast.distortions) == len(naive.distortions) and rel_close(
                fast.distortions, naive.distortions, 1e-9)
            trace_mismatch += int(not same)
    ok = count_mismatch == 0 and worst_sum <= 1e-9 and trace_mismatch == 0
    record_criterion(1, ok, f"count mismatches={count_mismatch} worst sum rel err={worst_sum:.2e} "
                            f"trace mismatches={trace_mismatch} (25 instances x 2 builders)")
    assert ok


def test_criterion_2_anomaly_equivalence(record_criterion):
    rng = np.random.default_rng(2)
    data = Dataset(clustered(rng, 5000, 10, n_clusters=12, spread=0.04))
    dense = data.points[rng.choice(data.R, 250, replace=False)] + rng.normal(0, 0.02, (250, 10))
    empty = rng.uniform(-1.0, 2.0, size=(250, 10))
    Q = np.vstack([dense, empty])
    settings = [(0.05, 5), (0.1, 50), (0.3, 500)]
    agree, total, fast_n, slow_n = 0, 0, 0, 0
    for builder in BUILDERS:
        t = build_tree(data, BuildConfig(builder=builder))
        for radius, thr in settings:
            fc, sc = DistanceCounter(), DistanceCounter()
            fast = anomaly_verdicts(t, Q, radius, thr, fc)
            slow = brute_force_verdicts(data, Q, radius, thr, sc)
            agree += int(np.sum(fast == slow))
            total += len(Q)
            fast_n += fc.count
            slow_n += sc.count
    ok = agree == total
    record_criterion(2, ok, f"{agree}/{total} verdicts agree (500 queries x 3 settings x 2 builders); "
                            f"distances fast/brute={fast_n}/{slow_n}")
    assert ok


def test_criterion_3_allpairs_equivalence(record_criterion):
    set_mismatch, worst_rho = 0, 0.0
    n_pairs = 0
    for inst in range(10):
        rng = np.random.default_rng(300 + inst)
        m = rng.normal(size=(500, 100))
        if inst % 3 != 2:  # planted correlated groups in most matrices
            for _ in range(int(rng.integers(2, 6))):
                base = rng.normal(size=500)
                for c in rng.choice(100, size=int(rng.integers(2, 8)), replace=False):
                    m[:, c] = base + float(rng.uniform(0.05, 1.0)) * rng.normal(size=500)
        norm = normalize_attributes(m)
        pearson = np.corrcoef(m, rowvar=False)
        for rho_min in (0.3, 0.5, 0.9):
            fast = find_correlated_pairs(norm, rho_min, BuildConfig(r_min=8, seed=inst))
            slow = brute_force_pairs(norm, rho_min, DistanceCounter())
            set_mismatch += int(fast.keys() != slow.keys())
            n_pairs += len(fast)
            for (i, j), r in fast.pairs.items():
                worst_rho = max(worst_rho, abs(r - pearson[i, j]))
    ok = set_mismatch == 0 and worst_rho <= 1e-9
    record_criterion(3, ok, f"set mismatches={set_mismatch}/30, {n_pairs} pairs, "
                            f"max |rho - pearson|={worst_rho:.2e}")
    assert ok


def test_criterion_4_squiggles_speedup(record_criterion):
    R, K = 20_000, 3
    data = gen_squiggles(R, seed=0).data
    t = build_tree(data, BuildConfig(seed=0))
    res = run_kmeans(data, K, tree=t, init="random", seed=0, max_iters=50)
    frac = np.array(res.step_counts) / (R * K)
    ok = bool(frac.max() <= 0.20)
    record_criterion(4, ok, f"fast/naive per iteration: max={frac.max():.3f} mean={frac.mean():.3f} "
                            f"over {res.iterations} iterations (limit 0.20)")
    assert ok


def _root_split_purity(R, M, seed):
    g = gen_two_class_binary(R, M, seed)
    # r_min = R - 1 makes the root the only split
    root = build_top_down(g.data, np.arange(R), BuildConfig(r_min=R - 1, builder="top_down"),
                          DistanceCounter())
    left = np.zeros(R, dtype=bool)
    left[root.left.indices] = True
    y = g.labels
    a_left, b_left = left[y == 0].mean(), left[y == 1].mean()
    return max(min(a_left, 1 - b_left), min(1 - a_left, b_left))


def test_criterion_5_first_split_purity(record_criterion):
    purities = [_root_split_purity(20_000, 1000, seed) for seed in range(5)]
    med = float(np.median(purities))
    ok = med >= 0.95
    record_criterion(5, ok, f"median purity={med:.3f} (per seed {', '.join(f'{p:.3f}' for p in purities)}; "
                            f"need >= 0.95)")
    assert ok


def test_criterion_6_builder_comparison(record_criterion):
    ratios = []
    for seed in range(5):
        data = gen_sparse_mixture(20_000, 100, 20, seed=seed).data
        cmp = compare_builders(ExperimentConfig(algorithm="kmeans", data=data, K=20, seed=seed, max_iters=50))
        ratios.append(cmp.ratio)
    med = float(np.median(ratios))
    ok = med >= 1.0
    record_criterion(6, ok, f"median topdown/anchors fast-count ratio={med:.3f} "
                            f"(per seed {', '.join(f'{r:.3f}' for r in ratios)})")
    assert ok


def test_criterion_7_anchor_initialisation(record_criterion):
    details, ok = [], True
    cases = [
        ("squiggles", lambda s: gen_squiggles(20_000, seed=s).data, 20),
        ("sparse_mixture", lambda s: gen_sparse_mixture(10_000, 100, 20, seed=s).data, 20),
    ]
    for name, make, K in cases:
        rows = [compare_inits(make(s), K, seed=s, iters=50) for s in range(5)]
        start_rand = float(np.median([r.random_start for r in rows]))
        start_anc = float(np.median([r.anchors_start for r in rows]))
        end_rand = float(np.median([r.random_end for r in rows]))
        end_anc = float(np.median([r.anchors_end for r in rows]))
        case_ok = start_anc <= start_rand and end_anc <= 1.05 * end_rand
        ok = ok and case_ok
        details.append(f"{name} K={K}: start benefit={start_rand / start_anc:.2f} "
                       f"end benefit={end_rand / end_anc:.3f}")
    record_criterion(7, ok, "; ".join(details) + " (medians of 5 seeds)")
    assert ok


def test_criterion_8_anchor_cost(record_criterion):
    R = 20_000
    k = math.ceil(math.sqrt(R))
    data = Dataset(np.random.default_rng(8).random((R, 2)))
    c = DistanceCounter()
    build_anchors(data, k, c, seed=8)
    limit = 0.5 * R * k
    ok = c.count <= limit
    record_criterion(8, ok, f"k={k}: {c.count} distances = {c.count / (R * k):.3f} R*k (limit 0.5 R*k)")
    assert ok


def test_criterion_9_structural_invariants(record_criterion):
    tree_bad, anchor_bad, cutoff_bad, nondeterministic = 0, 0, 0, 0
    for inst in range(50):
        rng = np.random.default_rng(900 + inst)
        R = int(rng.integers(2, 2001))
        M = int(rng.integers(1, 12))
        X = clustered(rng, R, M) if inst % 2 else np.round(rng.normal(size=(R, M)), 1)
        data = Dataset(X)
        r_min = int(rng.integers(1, 50))
        for builder in BUILDERS:
            cfg = BuildConfig(r_min=r_min, builder=builder, seed=inst)
            t = build_tree(data, cfg)
            tree_bad += int(not validate_tree(data, t.root, r_min=r_min).ok)
            again = build_tree(data, cfg)
            nondeterministic += int(tree_stats_rows(t.root) != tree_stats_rows(again.root))
        k = int(rng.integers(1, min(R, 60) + 1))
        a = build_anchors(data, k, DistanceCounter(), seed=inst)
        b = build_anchors(data, k, DistanceCounter(), seed=inst, use_cutoff=False)
        anchor_bad += int(bool(validate_anchors(a)))
        same = a.pivots() == b.pivots() and all(
            np.array_equal(np.sort(x.indices), np.sort(y.indices)) for x, y in zip(a.anchors, b.anchors))
        cutoff_bad += int(not same)
    ok = tree_bad == anchor_bad == cutoff_bad == nondeterministic == 0
    record_criterion(9, ok, f"50 instances: tree failures={tree_bad} anchor failures={anchor_bad} "
                            f"cutoff disagreements={cutoff_bad} nondeterministic builds={nondeterministic}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
