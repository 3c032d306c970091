import numpy as np
import pytest

from picstbc.codes import alamouti, build_registry, code_2x3, code_4x6, get_code, oac_3x8, qostbc_tbh
from picstbc.constellation import make_qam
from picstbc.equivchan import (GroupingScheme, build_equivalent_channel, equivalent_channel_matrix,
                               group_columns, receive_transform, verify_norm_identity)
from picstbc.errors import DirectOnlyCode

from conftest import crandn

DISPERSION = [label for label, code in build_registry().items() if not code.direct_only]


def test_alamouti_unit_channel():
    E = build_equivalent_channel(alamouti(), np.array([[1.0, 0.0]]))
    np.testing.assert_allclose(E.G, np.array([[1, 0], [0, -1]]) / np.sqrt(2), atol=1e-15)
    assert (E.m, E.n) == (2, 2)


def test_alamouti_general_single_antenna(rng):
    h0, h1 = crandn(rng, 2)
    G = equivalent_channel_matrix(alamouti(), np.array([[h0, h1]]))
    expected = np.array([[h0, h1], [np.conj(h1), -np.conj(h0)]]) / np.sqrt(2)
    np.testing.assert_allclose(G, expected, atol=1e-15)


def test_alamouti_two_antennas(rng):
    H = crandn(rng, 2, 2)
    G = equivalent_channel_matrix(alamouti(), H)
    c = np.conj
    expected = np.array([
        [H[0, 0], H[0, 1]], [c(H[0, 1]), -c(H[0, 0])],
        [H[1, 0], H[1, 1]], [c(H[1, 1]), -c(H[1, 0])],
    ]) / np.sqrt(2)
    np.testing.assert_allclose(G, expected, atol=1e-15)


def test_code_2x3_channel_form(rng):
    code = code_2x3()
    h0, h1 = crandn(rng, 2)
    c, s = np.cos(code.params["theta"]), np.sin(code.params["theta"])
    G = equivalent_channel_matrix(code, np.array([[h0, h1]]))
    expected = np.array([
        [c * h0, s * h0, 0, 0],
        [-s * h1, c * h1, c * h0, s * h0],
        [0, 0, -s * h1, c * h1],
    ]) * code.energy_scale / np.sqrt(2)
    np.testing.assert_allclose(G, expected, atol=1e-15)


def test_qostbc_second_column_recomputed_from_codeword(rng):
    h = crandn(rng, 4)
    G = equivalent_channel_matrix(qostbc_tbh(), h[None, :])
    c = np.conj
    np.testing.assert_allclose(G[:, 2], np.array([h[2], c(h[3]), h[0], c(h[1])]) / 2, atol=1e-15)


def test_zero_channel_gives_zero_matrix():
    for code in build_registry().values():
        G = equivalent_channel_matrix(code, np.zeros((2, code.n_t)))
        assert G.shape == (2 * code.t, code.n)
        np.testing.assert_array_equal(G, 0)


@pytest.mark.parametrize("label", sorted(build_registry()))
def test_scaling_invariance(label, rng):
    code = get_code(label)
    H = crandn(rng, 5, 2, code.n_t)
    np.testing.assert_array_equal(equivalent_channel_matrix(code, 2 * H), 2 * equivalent_channel_matrix(code, H))


def test_direct_codes_stack_per_antenna(rng):
    for code in (code_4x6(), oac_3x8()):
        H = crandn(rng, 3, code.n_t)
        G = equivalent_channel_matrix(code, H)
        for r in range(3):
            np.testing.assert_allclose(G[r * code.t:(r + 1) * code.t], equivalent_channel_matrix(code, H[r:r + 1]),
                                       atol=1e-15)


def test_code_4x6_block_orthogonality(rng):
    G = equivalent_channel_matrix(code_4x6(), crandn(rng, 200, 1, 4))
    cross = np.conj(np.swapaxes(G[..., 0:2], -1, -2)) @ G[..., 2:4]
    assert np.max(np.abs(cross)) < 1e-14


def test_receive_transform_alamouti():
    y0, y1 = 1 + 2j, -3 + 0.5j
    np.testing.assert_allclose(receive_transform(alamouti(), np.array([[y0, y1]])), [y0, np.conj(y1)])


def test_receive_transform_plain_is_flatten(rng):
    Y = crandn(rng, 2, 3)
    np.testing.assert_array_equal(receive_transform(code_2x3(), Y), Y.ravel())


def test_receive_transform_direct_only():
    with pytest.raises(DirectOnlyCode):
        receive_transform(code_4x6(), np.zeros((1, 6)))


@pytest.mark.parametrize("label", DISPERSION)
def test_noiseless_round_trip(label, rng):
    code = get_code(label)
    for n_r in (1, 3):
        H = crandn(rng, 20, n_r, code.n_t)
        x = crandn(rng, 20, code.n)
        Y = (H @ code.encode(x)) / np.sqrt(code.n_t)
        y = receive_transform(code, Y)
        Gx = (equivalent_channel_matrix(code, H) @ x[..., None])[..., 0]
        assert np.max(np.abs(y - Gx)) < 1e-12


@pytest.mark.parametrize("label", DISPERSION)
def test_norm_identity(label):
    code = get_code(label)
    assert verify_norm_identity(code, trials=1000, rng=4) < 1e-10
    assert verify_norm_identity(code, trials=200, n_r=2, A=make_qam(16), rng=5) < 1e-10


def test_norm_identity_equal_symbols_gives_zero():
    # x1 = x2 through a one-point constellation
    assert verify_norm_identity(alamouti(), trials=10, A=np.array([0.5 + 0.5j]), rng=0) == 0


def test_group_columns_examples(rng):
    E = build_equivalent_channel(alamouti(), crandn(rng, 1, 2))
    gk, gc = group_columns(E, GroupingScheme(((0,), (1,))), 0)
    np.testing.assert_array_equal(gk, E.G[:, [0]])
    np.testing.assert_array_equal(gc, E.G[:, [1]])
    gk, gc = group_columns(E, GroupingScheme.single(2), 0)
    assert gc.shape == (2, 0)
    G = crandn(rng, 5, 4)
    gk, gc = group_columns(G, GroupingScheme.parse("0,2|1,3"), 1)
    np.testing.assert_array_equal(gk, G[:, [1, 3]])
    np.testing.assert_array_equal(gc, G[:, [0, 2]])


def test_group_columns_reassemble(rng):
    G = crandn(rng, 6, 6)
    scheme = GroupingScheme.parse("4,0|2|5,1,3")
    for k in range(len(scheme)):
        gk, gc = group_columns(G, scheme, k)
        out = np.empty_like(G)
        out[:, list(scheme[k])] = gk
        out[:, list(scheme.complement(k))] = gc
        np.testing.assert_array_equal(out, G)


def test_grouping_validation():
    assert str(GroupingScheme.parse(" 0, 2 | 1,3 ")) == "0,2|1,3"
    for bad in ("0,1|1", "0|2", "0||1", "a|b"):
        with pytest.raises(ValueError):
            GroupingScheme.parse(bad)
    assert GroupingScheme.per_symbol(3).groups == ((0,), (1,), (2,))
    assert GroupingScheme.single(3).complement(0) == ()
