import itertools
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fdrbmf.binmat import (
    EmptyTileError,
    FactorPairBinary,
    InapplicableError,
    Tile,
    as_binary,
    boolean_product,
    eta,
    format_matrix,
    read_matrix,
    residual_l1,
    tile_density,
    tile_eta,
    tile_overlap,
    write_matrix,
)


def binary(shape):
    return arrays(np.uint8, shape, elements=st.integers(0, 1))


@st.composite
def factor_pairs(draw, max_dim=7, max_r=4):
    n = draw(st.integers(1, max_dim))
    m = draw(st.integers(1, max_dim))
    r = draw(st.integers(0, max_r))
    return FactorPairBinary(draw(binary((n, r))), draw(binary((m, r))))


def product_by_loops(F):
    out = np.zeros((F.m, F.n), dtype=np.uint8)
    for j in range(F.m):
        for i in range(F.n):
            out[j, i] = any(F.Y[j, s] and F.X[i, s] for s in range(F.n_columns))
    return out


def test_single_cell_tile():
    F = FactorPairBinary(np.array([[1]]), np.array([[1]]))
    assert boolean_product(F).tolist() == [[1]]
    F = FactorPairBinary(np.array([[0], [1], [0]]), np.array([[1], [0]]))
    P = boolean_product(F)
    assert P.sum() == 1 and P[0, 1] == 1


def test_empty_factorization_product_is_zero():
    F = FactorPairBinary.empty(4, 3)
    assert boolean_product(F).shape == (3, 4)
    assert not boolean_product(F).any()


def test_two_tile_product():
    F = FactorPairBinary(np.array([[1, 0], [1, 1]]), np.array([[1, 0], [0, 1]]))
    assert boolean_product(F).tolist() == [[1, 1], [0, 1]]
    # X/Y roles: pattern rows index columns of D, usage rows index rows of D
    assert boolean_product(F).tolist() == product_by_loops(F).tolist()


def test_two_tile_product_as_listed():
    # same matrices read with X as usage and Y as pattern give the other orientation
    F = FactorPairBinary(np.array([[1, 0], [0, 1]]), np.array([[1, 0], [1, 1]]))
    assert boolean_product(F).tolist() == [[1, 0], [1, 1]]


@given(factor_pairs())
def test_product_matches_loops(F):
    assert np.array_equal(boolean_product(F), product_by_loops(F))


@given(factor_pairs(), st.data())
def test_duplicate_tile_leaves_product_unchanged(F, data):
    if F.n_columns == 0:
        return
    s = data.draw(st.integers(0, F.n_columns - 1))
    G = FactorPairBinary(np.hstack([F.X, F.X[:, [s]]]), np.hstack([F.Y, F.Y[:, [s]]]))
    assert np.array_equal(boolean_product(F), boolean_product(G))


def test_residual_examples():
    rng = np.random.default_rng(0)
    X = (rng.random((5, 2)) < 0.5).astype(np.uint8)
    Y = (rng.random((4, 2)) < 0.5).astype(np.uint8)
    F = FactorPairBinary(X, Y)
    assert residual_l1(boolean_product(F), F) == 0
    assert residual_l1(np.ones((3, 4)), FactorPairBinary.empty(4, 3)) == 12


def test_residual_random_6x6_against_cell_loop():
    rng = np.random.default_rng(1)
    for _ in range(20):
        D = (rng.random((6, 6)) < 0.4).astype(np.uint8)
        F = FactorPairBinary(
            (rng.random((6, 2)) < 0.4).astype(np.uint8), (rng.random((6, 2)) < 0.4).astype(np.uint8)
        )
        P = product_by_loops(F)
        expected = sum(int(D[j, i] != P[j, i]) for j in range(6) for i in range(6))
        assert residual_l1(D, F) == expected


@given(factor_pairs(), st.data())
def test_residual_permutation_invariant(F, data):
    D = data.draw(binary((F.m, F.n)))
    order = data.draw(st.permutations(range(F.n_columns)))
    assert residual_l1(D, F) == residual_l1(D, F.permuted(list(order)))
    if F.n_columns == 0:
        assert residual_l1(D, F) == int(D.sum())


@given(binary((5, 6)))
def test_l1_equals_squared_frobenius(M):
    assert int(M.sum()) == int(np.linalg.norm(M.astype(float)) ** 2 + 0.5)


def test_overlap_and_density_examples():
    M = np.ones((4, 5), dtype=np.uint8)
    t = Tile([1, 1, 0, 1, 0], [0, 1, 1, 0])
    assert tile_overlap(t, M) == 6
    assert tile_density(t, M) == 1.0
    assert tile_density(t, np.zeros((4, 5))) == 0.0
    assert tile_overlap(Tile([0] * 5, [1] * 4), M) == 0
    assert tile_density(Tile([1, 1], [1, 1]), np.eye(2, dtype=np.uint8)) == 0.5


def test_density_of_empty_tile_raises():
    with pytest.raises(EmptyTileError):
        tile_density(Tile([0, 0], [1, 1]), np.ones((2, 2)))


def test_overlap_random_5x5_against_double_loop():
    rng = np.random.default_rng(2)
    for _ in range(30):
        M = (rng.random((5, 5)) < 0.5).astype(np.uint8)
        x = (rng.random(5) < 0.5).astype(np.uint8)
        y = (rng.random(5) < 0.5).astype(np.uint8)
        expected = sum(int(y[j] * M[j, i] * x[i]) for j in range(5) for i in range(5))
        assert tile_overlap(Tile(x, y), M) == expected


@given(st.data())
def test_overlap_bounded_and_density_in_unit_interval(data):
    M = data.draw(binary((5, 4)))
    x = data.draw(binary((4,)))
    y = data.draw(binary((5,)))
    t = Tile(x, y)
    a, b = t.size
    assert 0 <= tile_overlap(t, M) <= a * b
    if a and b:
        assert 0.0 <= tile_density(t, M) <= 1.0


def test_eta_examples():
    assert eta(np.eye(4, dtype=np.uint8)) == 0
    assert eta(np.ones((5, 3), dtype=np.uint8)) == 5
    with pytest.raises(InapplicableError):
        eta(np.ones((3, 1), dtype=np.uint8))


def pair_scan(M):
    return max(
        int(np.dot(M[:, i].astype(int), M[:, k].astype(int)))
        for i, k in itertools.combinations(range(M.shape[1]), 2)
    )


def test_eta_random_6x4_against_pair_scan():
    rng = np.random.default_rng(3)
    for _ in range(30):
        M = (rng.random((6, 4)) < 0.5).astype(np.uint8)
        assert eta(M) == pair_scan(M)


def test_eta_real_valued():
    B = np.array([[0.5, 0.5, 0.0], [1.0, 0.2, 0.1]])
    assert eta(B) == pytest.approx(max(0.25 + 0.2, 0.1 * 0.2, 0.02))


def test_tile_eta_examples():
    D = np.ones((6, 5), dtype=np.uint8)
    with pytest.raises(InapplicableError):
        tile_eta(Tile([1, 0, 0, 0, 0], [1] * 6), D)
    t = Tile([1, 1, 1, 0, 0], [1, 1, 0, 1, 0, 0])
    assert tile_eta(t, D) == 3
    assert tile_eta(t, D, transposed=True) == 3


def test_tile_eta_random_8x8_against_masked_matrix():
    rng = np.random.default_rng(4)
    for _ in range(30):
        D = (rng.random((8, 8)) < 0.5).astype(np.uint8)
        x = (rng.random(8) < 0.5).astype(np.uint8)
        y = (rng.random(8) < 0.5).astype(np.uint8)
        if x.sum() < 2:
            continue
        masked = np.outer(y, x) * D
        cols = masked[:, x.astype(bool)]
        assert tile_eta(Tile(x, y), D) == pair_scan(cols)
        assert tile_eta(Tile(x, y), D) <= eta(D)


@given(st.data())
@settings(max_examples=50)
def test_tile_eta_never_exceeds_eta(data):
    D = data.draw(binary((6, 6)))
    x = data.draw(binary((6,)))
    y = data.draw(binary((6,)))
    if x.sum() >= 2:
        assert tile_eta(Tile(x, y), D) <= eta(D)
    if y.sum() >= 2:
        assert tile_eta(Tile(x, y), D, transposed=True) <= eta(D.T.copy())


def test_storage_layout_does_not_matter():
    rng = np.random.default_rng(5)
    D = (rng.random((7, 9)) < 0.5).astype(np.uint8)
    X = (rng.random((9, 3)) < 0.5).astype(np.uint8)
    Y = (rng.random((7, 3)) < 0.5).astype(np.uint8)
    F1 = FactorPairBinary(X, Y)
    F2 = FactorPairBinary(np.asfortranarray(X), np.asfortranarray(Y))
    F3 = FactorPairBinary(X.astype(bool), Y.astype(np.int64))
    assert residual_l1(D, F1) == residual_l1(np.asfortranarray(D), F2) == residual_l1(D, F3)
    assert eta(D) == eta(np.asfortranarray(D)) == eta(D[:, ::-1])


def test_as_binary_rejects_bad_input():
    with pytest.raises(ValueError):
        as_binary(np.array([[0, 2]]))
    with pytest.raises(ValueError):
        as_binary(np.zeros(3))
    with pytest.raises(ValueError):
        FactorPairBinary(np.zeros((3, 2)), np.zeros((4, 1)))


def test_rank_counts_nonempty_columns():
    F = FactorPairBinary(np.array([[1, 1, 0], [0, 1, 1]]), np.array([[1, 0, 1], [1, 0, 0]]))
    assert F.n_columns == 3
    assert F.rank == 2
    assert F.compact().n_columns == 2


@given(binary((4, 7)))
def test_matrix_text_roundtrip(M):
    assert np.array_equal(read_matrix_text(format_matrix(M)), M)


def read_matrix_text(text):
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "m.txt"
        p.write_text(text)
        return read_matrix(p)


def test_matrix_file_format(tmp_path):
    M = np.array([[1, 0, 1], [0, 0, 1]], dtype=np.uint8)
    write_matrix(tmp_path / "m.txt", M)
    assert (tmp_path / "m.txt").read_text() == "2 3\n101\n001\n"
    (tmp_path / "bad.txt").write_text("2 3\n101\n")
    with pytest.raises(ValueError):
        read_matrix(tmp_path / "bad.txt")
    (tmp_path / "bad2.txt").write_text("1 3\n1a1\n")
    with pytest.raises(ValueError):
        read_matrix(tmp_path / "bad2.txt")
