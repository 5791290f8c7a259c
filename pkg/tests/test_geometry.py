import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcwsn.geometry import (Deployment, Point, build_index, distance, make_deployment, pairs_within,
                            query_point, radius_query, sample_polar_disk, sample_uniform_disk)
from dcwsn.rng import make_rng
from oracles import brute_pairs, brute_radius


def test_single_point_has_origin():
    dep = sample_uniform_disk(1, seed=5)
    assert len(dep) == 2
    assert dep[0] == Point(0.0, 0.0)


def test_rejects_empty_and_wide_wedge():
    with pytest.raises(ValueError):
        sample_uniform_disk(0)
    with pytest.raises(ValueError):
        sample_uniform_disk(10, wedge_angle=math.pi / 4)


def test_points_inside_unit_disk():
    dep = sample_uniform_disk(20000, seed=3)
    assert np.all(np.hypot(dep.points[:, 0], dep.points[:, 1]) <= 1.0 + 1e-12)


def test_inner_half_radius_holds_a_quarter():
    dep = sample_uniform_disk(100_000, seed=42)
    rad = np.hypot(dep.points[1:, 0], dep.points[1:, 1])
    assert abs((rad <= 0.5).mean() - 0.25) <= 0.005
    assert abs(dep.points[1:, 0].mean()) <= 0.004


@pytest.mark.parametrize("sampler", [sample_uniform_disk, sample_polar_disk])
def test_equal_area_annuli_chi_square(sampler):
    chisquare = pytest.importorskip("scipy.stats").chisquare
    K = 20
    dep = sampler(100_000, seed=9)
    rad2 = np.hypot(dep.points[1:, 0], dep.points[1:, 1]) ** 2
    counts = np.bincount(np.minimum((rad2 * K).astype(int), K - 1), minlength=K)
    assert chisquare(counts).pvalue > 0.001


def test_deterministic_bytes():
    a = sample_uniform_disk(1000, seed=77)
    b = sample_uniform_disk(1000, seed=77)
    c = sample_uniform_disk(1000, seed=78)
    assert a.to_bytes() == b.to_bytes()
    assert a.to_bytes() != c.to_bytes()


def test_csv_round_trip(tmp_path):
    dep = make_deployment(50, seed=2)
    path = tmp_path / "dep.csv"
    text = dep.to_csv(path)
    assert text.splitlines()[0] == "index,x,y"
    back = Deployment.from_csv(path)
    assert np.array_equal(back.points, dep.points)


def test_points_are_read_only():
    dep = make_deployment(10, seed=1)
    with pytest.raises(ValueError):
        dep.points[1, 0] = 3.0


def test_distance_examples():
    assert distance((0, 0), (0, 0)) == 0
    assert distance((0, 0), (0.3, 0.4)) == pytest.approx(0.5)
    assert distance((-0.1, 0), (0.1, 0)) == pytest.approx(0.2)


@given(st.tuples(*[st.floats(-1, 1)] * 6))
def test_distance_metric_axioms(v):
    p, q, s = v[0:2], v[2:4], v[4:6]
    assert distance(p, q) == distance(q, p)
    assert distance(p, s) <= distance(p, q) + distance(q, s) + 1e-12


def test_small_index_single_leaf():
    dep = Deployment(np.array([[0.0, 0.0], [0.1, 0.1]]))
    idx = build_index(dep, leaf_capacity=64)
    assert len(idx.leaves) == 1
    assert sorted(idx.leaf_contents()[0].tolist()) == [0, 1]


def test_leaves_partition_points():
    dep = make_deployment(10_000, seed=4)
    idx = build_index(dep, leaf_capacity=32)
    leaves = idx.leaf_contents()
    assert max(len(x) for x in leaves) <= 32
    assert sorted(np.concatenate(leaves).tolist()) == list(range(len(dep)))


def test_radius_query_edge_radii():
    dep = make_deployment(300, seed=8)
    idx = build_index(dep)
    assert len(radius_query(idx, 5, 0.0)) == 0
    assert radius_query(idx, 5, 2.0).tolist() == [i for i in range(len(dep)) if i != 5]
    with pytest.raises(ValueError):
        radius_query(idx, len(dep), 0.1)
    with pytest.raises(ValueError):
        radius_query(idx, 0, -1.0)


def test_radius_query_origin_example():
    dep = make_deployment(500, seed=7)
    idx = build_index(dep)
    assert radius_query(idx, 0, 0.1).tolist() == brute_radius(dep.points, 0, 0.1).tolist()


def test_radius_query_matches_brute_force_50_cases():
    rng = np.random.default_rng(0)
    for case in range(50):
        n = int(rng.integers(1, 2001))
        dep = make_deployment(n, seed=case, sampler="wedge" if case % 2 else "polar")
        idx = build_index(dep, leaf_capacity=int(rng.integers(1, 64)))
        r = float(rng.uniform(0, 0.4))
        for center in rng.integers(0, len(dep), 5):
            assert radius_query(idx, int(center), r).tolist() == brute_radius(dep.points, center, r).tolist()


def test_query_point_arbitrary_location():
    dep = make_deployment(800, seed=12)
    idx = build_index(dep)
    pts = dep.points
    d2 = (pts[:, 0] - 0.3) ** 2 + (pts[:, 1] + 0.2) ** 2
    assert query_point(idx, 0.3, -0.2, 0.15).tolist() == np.flatnonzero(d2 <= 0.15 ** 2).tolist()


@pytest.mark.parametrize("n,r,leaf", [(1, 0.5, 32), (200, 0.1, 1), (400, 0.3, 7), (600, 0.05, 32)])
def test_pairs_within_matches_brute_force(n, r, leaf):
    dep = make_deployment(n, seed=n)
    pairs = pairs_within(build_index(dep, leaf), r)
    assert set(map(tuple, pairs.tolist())) == brute_pairs(dep.points, r)
    assert len(pairs) == len(set(map(tuple, pairs.tolist())))
    assert np.all(pairs[:, 0] < pairs[:, 1]) if len(pairs) else True


def test_rng_streams_are_independent_and_validated():
    a = make_rng(1, 0, 0).random(4)
    b = make_rng(1, 0, 1).random(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, make_rng(1, 0, 0).random(4))
    with pytest.raises(ValueError):
        make_rng(-1)
