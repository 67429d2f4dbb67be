import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anchortree.allpairs import (
    brute_force_pairs,
    correlation_threshold_to_distance,
    find_correlated_pairs,
    normalize_attributes,
)
from anchortree.metricspace import DistanceCounter
from anchortree.tree import BuildConfig


def pearson_pairs(m, rho_min):
    """Oracle: every column pair with numpy's Pearson coefficient >= rho_min."""
    C = np.corrcoef(m, rowvar=False)
    n = m.shape[1]
    return {(i, j) for i in range(n) for j in range(i + 1, n) if C[i, j] >= rho_min}


def planted(rng, R, M, groups=3, size=4, noise=0.3):
    m = rng.normal(size=(R, M))
    for g in range(groups):
        base = rng.normal(size=R)
        cols = rng.choice(M, size=size, replace=False)
        for c in cols:
            m[:, c] = base + noise * rng.normal(size=R)
    return m


def test_normalize_example():
    norm = normalize_attributes([[1.0], [2.0], [3.0]])
    np.testing.assert_allclose(norm.points.points[0], [-1 / math.sqrt(2), 0, 1 / math.sqrt(2)], rtol=1e-15)


def test_constant_column_dropped_with_warning():
    m = [[1.0, 5.0, 0.0], [2.0, 5.0, 1.0], [3.0, 5.0, 5.0]]
    with pytest.warns(UserWarning, match="constant"):
        norm = normalize_attributes(m)
    assert norm.dropped == [1]
    assert norm.kept.tolist() == [0, 2]
    assert norm.points.R == 2


@pytest.mark.parametrize("bad", [[[1.0, 2.0]], [1.0, 2.0]])
def test_normalize_errors(bad):
    with pytest.raises(ValueError):
        normalize_attributes(bad)


def test_all_constant_rejected():
    with pytest.warns(UserWarning), pytest.raises(ValueError):
        normalize_attributes([[1.0, 4.0], [1.0, 4.0]])


def test_unit_norm_and_pearson_identity(rng):
    m = rng.normal(size=(50, 20)) * rng.uniform(0.1, 10, size=20) + rng.normal(size=20)
    norm = normalize_attributes(m)
    U = norm.points.points
    assert np.all(np.abs(U.sum(axis=1)) <= 1e-9 * 50)
    assert np.all(np.abs(np.linalg.norm(U, axis=1) - 1) <= 1e-9)
    C = np.corrcoef(m, rowvar=False)
    D2 = ((U[:, None, :] - U[None, :, :]) ** 2).sum(axis=2)
    np.testing.assert_allclose(1 - D2 / 2, C, atol=1e-9)


@pytest.mark.parametrize("rho,expected", [(1.0, 0.0), (-1.0, 2.0), (0.5, 1.0)])
def test_threshold_examples(rho, expected):
    assert correlation_threshold_to_distance(rho) == expected


@pytest.mark.parametrize("rho", [1.01, -1.5])
def test_threshold_out_of_range(rho):
    with pytest.raises(ValueError):
        correlation_threshold_to_distance(rho)


def test_duplicate_present_negated_absent(rng):
    m = rng.normal(size=(100, 6))
    m[:, 4] = m[:, 1]
    m[:, 5] = -m[:, 2]
    norm = normalize_attributes(m)
    for rho_min in [-0.99, 0.0, 0.9, 1.0 - 1e-12]:
        got = find_correlated_pairs(norm, rho_min).keys()
        assert (1, 4) in got
        assert (2, 5) not in got


def test_matches_brute_force_200x80(rng):
    m = planted(rng, 200, 80)
    norm = normalize_attributes(m)
    slow_c, fast_c = DistanceCounter(), DistanceCounter()
    slow = brute_force_pairs(norm, 0.5, slow_c)
    fast = find_correlated_pairs(norm, 0.5, BuildConfig(r_min=4), fast_c, debug=True)
    assert fast.keys() == slow.keys() == pearson_pairs(m, 0.5)
    assert slow_c.count == 80 * 79 // 2
    for k, r in fast.pairs.items():
        assert r == pytest.approx(np.corrcoef(m[:, k[0]], m[:, k[1]])[0, 1], abs=1e-9)
        assert r >= 0.5 - 1e-12


def test_two_attributes_one_comparison(rng):
    norm = normalize_attributes(rng.normal(size=(30, 2)))
    c = DistanceCounter()
    brute_force_pairs(norm, 0.0, c)
    assert c.count == 1


def test_identical_attributes_give_every_pair(rng):
    col = rng.normal(size=(40, 1))
    norm = normalize_attributes(np.repeat(col, 7, axis=1))
    for fn in (lambda n, r: brute_force_pairs(n, r, DistanceCounter()), find_correlated_pairs):
        assert len(fn(norm, 1.0)) == 21


@pytest.mark.parametrize("seed", range(25))
def test_cross_check_random(seed):
    rng = np.random.default_rng(seed)
    R, M = int(rng.integers(5, 120)), int(rng.integers(2, 60))
    m = planted(rng, R, M, groups=int(rng.integers(0, 4)), size=min(M, 3))
    norm = normalize_attributes(m)
    rho_min = float(rng.choice([-0.2, 0.1, 0.3, 0.5, 0.9]))
    cfg = BuildConfig(r_min=int(rng.integers(1, 10)), builder=["middle_out", "top_down"][seed % 2])
    fast = find_correlated_pairs(norm, rho_min, cfg, debug=True)
    assert fast.keys() == brute_force_pairs(norm, rho_min, DistanceCounter()).keys()


@given(st.integers(0, 10_000))
def test_column_order_does_not_matter(seed):
    rng = np.random.default_rng(seed)
    m = planted(rng, 60, 25, groups=2)
    perm = rng.permutation(25)
    a = find_correlated_pairs(normalize_attributes(m), 0.4).keys()
    b = find_correlated_pairs(normalize_attributes(m[:, perm]), 0.4).keys()
    relabel = {tuple(sorted((int(perm[i]), int(perm[j])))) for i, j in b}
    assert relabel == a


def test_wholesale_emission_happens_and_is_sound(rng):
    base = rng.normal(size=(300, 1))
    m = base + 0.01 * rng.normal(size=(300, 40))
    norm = normalize_attributes(m)
    res = find_correlated_pairs(norm, 0.9, BuildConfig(r_min=2), debug=True)
    assert len(res) == 40 * 39 // 2
    assert res.emitted_wholesale > 0


def test_sorted_rows_descending(rng):
    res = find_correlated_pairs(normalize_attributes(planted(rng, 80, 30)), 0.2)
    rhos = [r for _, _, r in res.sorted_rows()]
    assert rhos == sorted(rhos, reverse=True)
