import numpy as np
import pytest
from scipy import stats

from fdrbmf.synth import PlantedParams, apply_noise, generate_planted, make_instance, size_range


def test_size_range_endpoints():
    assert size_range(1000, 0.1) == (10, 100)
    assert size_range(150, 0.1) == (2, 15)
    assert size_range(800, 0.01) == (8, 8)


def test_degenerate_range_fixes_sizes():
    X, Y = generate_planted(500, 300, 7, 0.01, np.random.default_rng(0))
    assert (X.sum(axis=0) == 5).all()
    assert (Y.sum(axis=0) == 3).all()


def test_zero_rank_is_empty():
    X, Y = generate_planted(50, 40, 0, 0.1, np.random.default_rng(0))
    assert X.shape == (50, 0) and Y.shape == (40, 0)


def test_invalid_range_rejected():
    with pytest.raises(ValueError):
        generate_planted(5, 5, 1, 0.1, np.random.default_rng(0))


def test_size_distribution_uniform():
    rng = np.random.default_rng(1)
    X, _ = generate_planted(1000, 1000, 10_000, 0.1, rng)
    sizes = X.sum(axis=0)
    assert sizes.min() >= 10 and sizes.max() <= 100
    counts = np.bincount(sizes, minlength=101)[10:101]
    _, pvalue = stats.chisquare(counts)
    assert pvalue > 0.01


def test_support_uniform_given_size():
    rng = np.random.default_rng(2)
    X, _ = generate_planted(200, 200, 4000, 0.1, rng)
    hits = X.sum(axis=1)
    expected = X.sum() / 200
    _, pvalue = stats.chisquare(hits, np.full(200, expected))
    assert pvalue > 0.01


def test_noise_examples():
    rng = np.random.default_rng(3)
    M = (rng.random((30, 20)) < 0.5).astype(np.uint8)
    np.testing.assert_array_equal(apply_noise(M, 0.0, 0.0, rng), M)
    assert apply_noise(np.zeros((6, 5), np.uint8), 1.0, 0.0, rng).all()
    Z = apply_noise(np.zeros((400, 320), np.uint8), 0.1, 0.0, np.random.default_rng(4))
    assert abs(Z.mean() - 0.1) <= 3 * np.sqrt(0.09 / (400 * 320))


def test_one_sided_noise():
    rng = np.random.default_rng(5)
    M = (rng.random((50, 40)) < 0.5).astype(np.uint8)
    up = apply_noise(M, 0.3, 0.0, rng)
    assert (up >= M).all() and (up > M).any()
    down = apply_noise(M, 0.0, 0.3, rng)
    assert (down <= M).all() and (down < M).any()


def test_noise_flips_uncorrelated():
    rng = np.random.default_rng(6)
    M = np.zeros((500, 400), np.uint8)
    flips = apply_noise(M, 0.2, 0.0, rng).astype(float).ravel()
    for shift in (1, 400):
        r = np.corrcoef(flips[:-shift], flips[shift:])[0, 1]
        assert abs(r) < 0.01


def test_instance_reproducible():
    p = PlantedParams(n=60, m=50, r_star=4, d=0.2, seed=7)
    a, b = make_instance(p), make_instance(p)
    np.testing.assert_array_equal(a.D, b.D)
    np.testing.assert_array_equal(a.X_star, b.X_star)
    c = make_instance(PlantedParams(n=60, m=50, r_star=4, d=0.2, seed=8))
    assert not np.array_equal(a.D, c.D)
    assert a.D.shape == (50, 60)
    assert a.planted.rank == 4
