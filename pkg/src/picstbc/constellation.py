"""Signal constellations, difference sets and nearest-point slicing."""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedOrder

QAM_ORDERS = (4, 16, 64, 256)


@dataclass(frozen=True, eq=False)
class Constellation:
    """A finite complex signal set with unit average energy.

    Use :func:`make_qam` or :meth:`from_points`; the constructor does not
    normalise.
    """

    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        size = pts.size
        if size < 2 or size & (size - 1):
            raise ValueError(f"constellation size must be a power of two, got {size}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("constellation points must be finite")
        if abs(np.mean(np.abs(pts) ** 2) - 1.0) > 1e-12:
            raise ValueError("constellation must have unit average energy")
        if np.unique(pts).size != size:
            raise ValueError("constellation points must be distinct")

    @classmethod
    def from_points(cls, points, label="custom", normalize=True):
        pts = np.asarray(points, dtype=complex).ravel()
        if normalize:
            pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
        return cls(pts, label)

    @property
    def size(self):
        return self.points.size

    @property
    def bits_per_symbol(self):
        return int(self.size).bit_length() - 1

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"Constellation({self.label!r}, size={self.size})"


def make_qam(order):
    """Square QAM on the odd Gaussian-integer grid, unit average energy.

    Points are indexed row-major: imaginary part descending, then real part
    ascending, so index 0 is the top-left corner.
    """
    side = int(round(np.sqrt(order)))
    if order not in QAM_ORDERS or side * side != order:
        raise UnsupportedOrder(f"unsupported QAM order {order}; use one of {QAM_ORDERS}")
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    re, im = np.meshgrid(levels, levels[::-1])
    grid = (re + 1j * im).ravel()
    # mean |a|^2 of the odd grid is 2 (order - 1) / 3
    scale = np.sqrt(2.0 * (order - 1) / 3.0)
    return Constellation(grid / scale, f"qam{order}")


def constellation_by_name(name):
    """Look up ``"qam4"``, ``"qam16"``, ``"qam64"`` or ``"qam256"``."""
    key = name.strip().lower().replace("-", "")
    if not key.startswith("qam"):
        raise UnsupportedOrder(f"unknown constellation {name!r}")
    try:
        order = int(key[3:])
    except ValueError:
        raise UnsupportedOrder(f"unknown constellation {name!r}") from None
    return make_qam(order)


def difference_set(A, decimals=12):
    """All pairwise differences ``a - b`` of the points, deduplicated.

    Accepts a :class:`Constellation` or any array of complex points. Values
    are deduplicated after rounding to ``decimals`` places and returned in
    sorted order (real part, then imaginary part).
    """
    pts = A.points if isinstance(A, Constellation) else np.asarray(A, dtype=complex).ravel()
    diffs = (pts[:, None] - pts[None, :]).ravel()
    keys = np.round(diffs.real, decimals) + 1j * np.round(diffs.imag, decimals)
    _, first = np.unique(keys, return_index=True)
    out = diffs[np.sort(first)]
    order = np.lexsort((out.imag, out.real))
    return out[order]


def slice_symbols(z, A):
    """Index of the nearest constellation point for every entry of ``z``.

    Ties go to the lowest index.
    """
    pts = A.points if isinstance(A, Constellation) else np.asarray(A, dtype=complex)
    z = np.asarray(z, dtype=complex)
    d = np.abs(z[..., None] - pts) ** 2
    return np.argmin(d, axis=-1)


def slice(z, A):  # noqa: A001 - public name mirrors the operation
    """Scalar form of :func:`slice_symbols`; returns a plain ``int``."""
    return int(slice_symbols(np.asarray(z, dtype=complex), A))
