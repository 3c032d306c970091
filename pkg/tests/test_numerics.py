import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from picstbc.errors import NotPositiveDefinite, RankDeficient
from picstbc.numerics import (column_space_projector, complement_projector, full_column_rank,
                              hermitian, inverse_sqrt_hermitian, pseudo_inverse,
                              span_complement_projector)

from conftest import crandn


def test_projector_single_unit_column():
    Q = column_space_projector(np.array([[1.0], [0.0]]))
    np.testing.assert_allclose(Q, [[1, 0], [0, 0]], atol=1e-15)


def test_projector_diagonal_direction():
    Q = column_space_projector(np.array([[1.0], [1.0]]) / np.sqrt(2))
    np.testing.assert_allclose(Q, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def test_projector_laws_unit_singular_values(rng):
    U, _ = np.linalg.qr(crandn(rng, 4, 2))
    Q = column_space_projector(U)
    np.testing.assert_allclose(Q @ Q, Q, atol=1e-12)
    np.testing.assert_allclose(hermitian(Q), Q, atol=1e-12)
    np.testing.assert_allclose(Q @ U, U, atol=1e-12)


def test_complement_of_empty_is_identity():
    P = complement_projector(np.zeros((3, 0), dtype=complex))
    np.testing.assert_array_equal(P, np.eye(3))
    np.testing.assert_array_equal(column_space_projector(np.zeros((3, 0))), np.zeros((3, 3)))


def test_complement_alamouti_example():
    # complement of g1 = [1, -1]/sqrt(2), i.e. Alamouti at h0 = h1 = 1
    g1 = np.array([[1.0], [-1.0]]) / np.sqrt(2)
    np.testing.assert_allclose(complement_projector(g1), 0.5 * np.ones((2, 2)), atol=1e-15)


def test_complement_cancels_random(rng):
    M = crandn(rng, 50, 6, 3)
    P = complement_projector(M)
    assert np.max(np.linalg.norm(P @ M, axis=(-2, -1))) < 1e-10
    np.testing.assert_allclose(P + column_space_projector(M), np.broadcast_to(np.eye(6), P.shape), atol=1e-14)


def test_rank_deficient_raises_with_index(rng):
    M = crandn(rng, 4, 5, 2)
    M[2, :, 1] = 3 * M[2, :, 0]
    with pytest.raises(RankDeficient) as info:
        complement_projector(M)
    assert info.value.index == 2


def test_more_columns_than_rows_is_rank_deficient(rng):
    assert not full_column_rank(crandn(rng, 2, 3))
    with pytest.raises(RankDeficient):
        pseudo_inverse(crandn(rng, 2, 3))


def test_rank_threshold_is_relative():
    assert full_column_rank(np.diag([1.0, 2e-9]))
    assert not full_column_rank(np.diag([1.0, 5e-10]))
    assert full_column_rank(np.diag([1e-30, 1e-30]))
    assert not full_column_rank(np.zeros((2, 2)))


def test_pseudo_inverse_examples(rng):
    np.testing.assert_allclose(pseudo_inverse(np.eye(2)), np.eye(2), atol=1e-15)
    U, _ = np.linalg.qr(crandn(rng, 3, 3))
    np.testing.assert_allclose(pseudo_inverse(U), hermitian(U), atol=1e-12)
    G = crandn(rng, 6, 3)
    assert np.linalg.norm(pseudo_inverse(G) @ G - np.eye(3)) < 1e-10


def test_pseudo_inverse_rows_pick_out_columns(rng):
    G = crandn(rng, 5, 3)
    Gp = pseudo_inverse(G)
    for k in range(3):
        for i in range(3):
            assert abs(Gp[k] @ G[:, i] - (k == i)) < 1e-10


def test_inverse_sqrt_examples(rng):
    np.testing.assert_allclose(inverse_sqrt_hermitian(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(inverse_sqrt_hermitian(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-15)
    g = crandn(rng, 4, 3)
    K = np.eye(4) + 100.0 * g @ hermitian(g)
    S = inverse_sqrt_hermitian(K)
    assert np.linalg.norm(S @ K @ S - np.eye(4)) < 1e-10
    np.testing.assert_allclose(hermitian(S), S, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(S) > 0)


def test_inverse_sqrt_rejects_singular():
    with pytest.raises(NotPositiveDefinite):
        inverse_sqrt_hermitian(np.diag([1.0, 0.0]))
    with pytest.raises(NotPositiveDefinite):
        inverse_sqrt_hermitian(np.diag([1.0, -2.0]))


def test_span_complement_tolerates_dependence(rng):
    g = crandn(rng, 4, 1)
    M = np.hstack([g, 2 * g])
    P = span_complement_projector(M)
    np.testing.assert_allclose(P, np.eye(4) - g @ hermitian(g) / np.vdot(g, g), atol=1e-12)
    np.testing.assert_array_equal(span_complement_projector(np.zeros((3, 0))), np.eye(3))


@settings(max_examples=60, deadline=None)
@given(m=st.integers(1, 6), data=st.data())
def test_projector_laws_property(m, data):
    k = data.draw(st.integers(0, m))
    seed = data.draw(st.integers(0, 2**32 - 1))
    M = crandn(np.random.default_rng(seed), m, k)
    P = complement_projector(M)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)
    np.testing.assert_allclose(hermitian(P), P, atol=1e-12)
    assert np.linalg.norm(P @ M) < 1e-10
