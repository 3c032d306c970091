import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from picstbc.constellation import (Constellation, constellation_by_name, difference_set, make_qam,
                                   slice, slice_symbols)
from picstbc.errors import UnsupportedOrder


def test_qam4_points():
    A = make_qam(4)
    expected = {complex(a, b) / np.sqrt(2) for a in (-1, 1) for b in (-1, 1)}
    assert {complex(np.round(p, 15)) for p in A.points} == {complex(np.round(p, 15)) for p in expected}
    assert A.bits_per_symbol == 2


def test_qam16_scale():
    A = make_qam(16)
    # unnormalised grid {+-1, +-3}^2 has mean energy 10
    assert np.min(np.abs(A.points.real)) == pytest.approx(1 / np.sqrt(10), abs=1e-15)


@pytest.mark.parametrize("order", [4, 16, 64, 256])
def test_unit_energy(order):
    A = make_qam(order)
    assert abs(np.mean(np.abs(A.points) ** 2) - 1) < 1e-12
    assert len(A) == order


def test_unsupported_order():
    with pytest.raises(UnsupportedOrder):
        make_qam(32)


def test_by_name():
    assert constellation_by_name("qam16").size == 16
    with pytest.raises(ValueError):
        constellation_by_name("psk8")


def test_invariants_enforced():
    with pytest.raises(ValueError):
        Constellation.from_points([1, 1j, -1], normalize=True)
    with pytest.raises(ValueError):
        Constellation.from_points([2, -2], normalize=False)
    with pytest.raises(ValueError):
        Constellation.from_points([1, 1], normalize=True)
    bpsk = Constellation.from_points([3, -3])
    np.testing.assert_allclose(bpsk.points, [1, -1])


def test_difference_set_bpsk():
    np.testing.assert_allclose(difference_set(np.array([-1.0, 1.0])), [-2, 0, 2])


def test_difference_set_qam4():
    d = difference_set(make_qam(4)) * np.sqrt(2)
    grid = {complex(a, b) for a in (-2, 0, 2) for b in (-2, 0, 2)}
    assert {complex(np.round(v, 12)) for v in d} == grid


@pytest.mark.parametrize("order", [4, 16, 64])
def test_difference_set_invariants(order):
    A = make_qam(order)
    d = difference_set(A)
    assert np.min(np.abs(d)) == 0
    assert len(d) <= order ** 2
    neg = {complex(np.round(-v, 9)) for v in d}
    assert neg == {complex(np.round(v, 9)) for v in d}


def test_slice_examples():
    A = make_qam(4)
    for k, p in enumerate(A.points):
        assert slice(p, A) == k
    assert slice(0, A) == 0


@settings(max_examples=100, deadline=None)
@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.sampled_from([4, 16, 64]))
def test_slice_matches_brute_force(z, order):
    A = make_qam(order)
    dists = [abs(z - p) for p in A.points]
    best = min(dists)
    # any point at the minimum distance is acceptable only if it is the first one
    assert slice(z, A) == next(i for i, d in enumerate(dists) if d == best)


def test_slice_batched_shape():
    A = make_qam(16)
    z = A.points[np.arange(16).reshape(4, 4)]
    np.testing.assert_array_equal(slice_symbols(z, A), np.arange(16).reshape(4, 4))
