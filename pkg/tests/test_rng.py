"""Deterministic stream behavior: splitting, normals, subset draws."""

import numpy as np

from lnlab.rng import GOLDEN, GaussianStream, derive_seed, mix64, splitmix64


def test_same_seed_same_draws():
    a = GaussianStream(123)
    b = GaussianStream(123)
    assert np.array_equal(a.normals(97), b.normals(97))
    assert np.array_equal(a.uniforms(31), b.uniforms(31))
    assert np.array_equal(a.subset(50, 7), b.subset(50, 7))


def test_split_is_closed_form_splitmix():
    for master in (0, 1, 2**63, 0xDEADBEEF):
        for r in (0, 1, 17, 9999):
            assert derive_seed(master, r) == mix64((master + (r + 1) * GOLDEN) & (2**64 - 1))
            assert derive_seed(master, r) == splitmix64(master, r)


def test_split_seeds_distinct():
    seeds = {derive_seed(42, r) for r in range(10000)}
    assert len(seeds) == 10000


def test_polar_box_muller_moments():
    z = GaussianStream(7).normals(200_000)
    assert abs(z.mean()) < 0.02
    assert abs(z.var() - 1.0) < 0.02
    assert abs(np.mean(z ** 4) - 3.0) < 0.1


def test_normals_independent_of_block_size():
    a = GaussianStream(5)
    b = GaussianStream(5)
    chunks = np.concatenate([a.normals(3), a.normals(64), a.normals(1)])
    assert np.array_equal(chunks, b.normals(68))


def test_subset_distinct_sorted_in_range():
    stream = GaussianStream(11)
    for _ in range(100):
        s = stream.subset(20, 6)
        assert len(set(s.tolist())) == 6
        assert np.all(np.diff(s) > 0)
        assert s.min() >= 0 and s.max() < 20


def test_subset_full_range():
    assert np.array_equal(GaussianStream(1).subset(5, 5), np.arange(5))


def test_subset_frequencies_uniform():
    # k = 1, n = 4: each index should appear with frequency 1/4 +- 0.01
    stream = GaussianStream(2024)
    counts = np.zeros(4)
    draws = 40_000
    for _ in range(draws):
        counts[stream.subset(4, 1)[0]] += 1
    assert np.all(np.abs(counts / draws - 0.25) < 0.01)


def test_ball_point_inside_radius():
    stream = GaussianStream(3)
    pts = np.stack([stream.ball_point(3, 2.5) for _ in range(500)])
    assert np.all(np.linalg.norm(pts, axis=1) <= 2.5 + 1e-12)
