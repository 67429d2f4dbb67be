import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anchortree.anomaly import (
    AnomalyQuery,
    anomaly_verdicts,
    brute_force_range_count,
    brute_force_verdicts,
    calibrate_threshold,
    is_anomaly,
    range_count,
)
from anchortree.metricspace import Dataset, DistanceCounter
from anchortree.tree import BuildConfig, build_tree

from conftest import clustered

BUILDERS = ["middle_out", "top_down"]


def oracle_count(X, q, radius):
    return sum(1 for x in X if float(np.sqrt(np.sum((x - q) ** 2))) <= radius)


@pytest.fixture(scope="module", params=BUILDERS)
def blobs(request):
    rng = np.random.default_rng(77)
    data = Dataset(clustered(rng, 5000, 4, n_clusters=10, spread=0.03))
    return data, build_tree(data, BuildConfig(builder=request.param))


def test_query_validation():
    with pytest.raises(ValueError):
        AnomalyQuery([0.0], -1.0, 1)
    with pytest.raises(ValueError):
        AnomalyQuery([0.0], 1.0, -1)


def test_threshold_zero_is_never_anomalous(blobs):
    data, t = blobs
    c = DistanceCounter()
    for qp in [data.points[0], np.full(4, 50.0)]:
        assert is_anomaly(t, AnomalyQuery(qp, 0.1, 0), c) is False
    assert c.count == 0


def test_far_query_pruned_at_root(blobs):
    data, t = blobs
    c = DistanceCounter()
    assert is_anomaly(t, AnomalyQuery(np.full(4, 100.0), 0.5, 1), c) is True
    assert c.count == 1


def test_inclusive_boundary_duplicates():
    data = Dataset([[1.0, 1.0], [1.0, 1.0], [2.0, 1.0], [5.0, 5.0]])
    q = AnomalyQuery([1.0, 1.0], 0.0, 3)
    c = DistanceCounter()
    assert brute_force_range_count(data, q, c) == 2
    assert c.count == 4
    assert brute_force_range_count(data, AnomalyQuery([1.0, 1.0], 1.0, 3), c) == 3
    t = build_tree(data, BuildConfig(r_min=1))
    assert range_count(t, [1.0, 1.0], 0.0, DistanceCounter()) == 2
    assert is_anomaly(t, q, DistanceCounter()) is True
    assert is_anomaly(t, AnomalyQuery([1.0, 1.0], 0.0, 2), DistanceCounter()) is False


def test_full_containment_counts_everything(blobs):
    data, t = blobs
    big = 1e3
    assert brute_force_range_count(data, AnomalyQuery(data.points[3], big, 1), DistanceCounter()) == data.R
    c = DistanceCounter()
    assert range_count(t, data.points[3], big, c) == data.R
    assert c.count == 1


def test_verdicts_match_brute_force(blobs):
    data, t = blobs
    rng = np.random.default_rng(1)
    dense = data.points[rng.choice(data.R, 250, replace=False)] + rng.normal(0, 0.01, (250, 4))
    empty = rng.uniform(-0.5, 1.5, size=(250, 4))
    Q = np.vstack([dense, empty])
    for radius, thr in [(0.02, 5), (0.05, 40), (0.2, 300)]:
        fast_c, slow_c = DistanceCounter(), DistanceCounter()
        fast = anomaly_verdicts(t, Q, radius, thr, fast_c)
        slow = brute_force_verdicts(data, Q, radius, thr, slow_c)
        np.testing.assert_array_equal(fast, slow)
        assert slow_c.count == len(Q) * data.R
        assert fast_c.count < slow_c.count


def test_range_count_against_oracle(blobs):
    data, t = blobs
    rng = np.random.default_rng(2)
    for _ in range(20):
        q = rng.uniform(0, 1, size=4)
        radius = float(rng.uniform(0.01, 0.6))
        assert range_count(t, q, radius, DistanceCounter(), debug=True) == oracle_count(data.points, q, radius)


@given(st.integers(0, 10_000))
def test_boundary_heavy_grid(seed):
    # integer lattice with integer radii puts many points exactly on the boundary
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(int(rng.integers(2, 200)), 2)).astype(float)
    data = Dataset(X)
    t = build_tree(data, BuildConfig(r_min=int(rng.integers(1, 8)), seed=seed,
                                     builder=BUILDERS[seed % 2]))
    q = rng.integers(0, 6, size=2).astype(float)
    radius = float(rng.integers(0, 4))
    thr = int(rng.integers(0, 15))
    truth = oracle_count(X, q, radius)
    assert is_anomaly(t, AnomalyQuery(q, radius, thr), DistanceCounter(), debug=True) == (truth < thr)
    assert range_count(t, q, radius, DistanceCounter(), debug=True) == truth


def test_threads_do_not_change_results(blobs):
    data, t = blobs
    Q = data.points[:200]
    c1, c4 = DistanceCounter(), DistanceCounter()
    a = anomaly_verdicts(t, Q, 0.03, 10, c1, threads=1)
    b = anomaly_verdicts(t, Q, 0.03, 10, c4, threads=4)
    np.testing.assert_array_equal(a, b)
    assert c1.count == c4.count


def test_calibration_hits_roughly_the_target(blobs):
    data, t = blobs
    thr = calibrate_threshold(t, 0.03, target_fraction=0.1, sample=400, seed=3)
    frac = anomaly_verdicts(t, data.points[::5], 0.03, thr, DistanceCounter()).mean()
    assert 0.03 < frac < 0.25
    with pytest.raises(ValueError):
        calibrate_threshold(t, 0.03, target_fraction=1.5)
