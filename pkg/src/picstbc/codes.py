"""Linear dispersion space-time block codes and the built-in code registry.

A code transmits ``X = s * sum_i (x_i A_i + conj(x_i) B_i)`` where ``s`` is the
energy scale that makes ``tr E{X^H X} = t * n_t`` for unit-energy symbols.
Codes whose codeword matrix is not usable (see ``code_4x6`` and ``oac_3x8``)
are defined directly by an equivalent-channel generator instead.
"""

from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np

from .equivchan import CONJUGATE, DIRECT, PLAIN, GroupingScheme
from .errors import DirectOnlyCode, InvalidColumnType

DEFAULT_THETA = 0.5 * np.arctan(2.0)


@dataclass(frozen=True, eq=False)
class LinearDispersionCode:
    label: str
    n_t: int
    t: int
    n: int
    default_grouping: GroupingScheme
    A: Optional[np.ndarray] = None  # (n, n_t, t)
    B: Optional[np.ndarray] = None
    gen: Optional[Callable] = None  # h (..., n_r, n_t) -> (..., n_r, t, n), unscaled
    energy_scale: float = 1.0
    params: dict = field(default_factory=dict)
    column_type: tuple = ()

    @property
    def direct_only(self):
        return self.A is None

    @property
    def rate(self):
        return self.n / self.t

    @property
    def spec(self):
        """Label plus parameters, e.g. ``code_2x3:theta=0.5536``."""
        if not self.params:
            return self.label
        args = ",".join(f"{k}={v!r}" if not isinstance(v, float) else f"{k}={v:.17g}"
                        for k, v in sorted(self.params.items()))
        return f"{self.label}:{args}"

    def encode(self, x):
        """Codeword matrix for symbol vector(s) ``x`` of shape ``(..., n)``."""
        if self.direct_only:
            raise DirectOnlyCode(f"code {self.label!r} is defined only through its equivalent channel")
        x = np.asarray(x, dtype=complex)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} symbols, got {x.shape[-1]}")
        X = np.einsum("...i,ijt->...jt", x, self.A) + np.einsum("...i,ijt->...jt", np.conj(x), self.B)
        return self.energy_scale * X


def _column_types(A, B):
    types = []
    for tau in range(A.shape[2]):
        has_a = np.any(A[:, :, tau] != 0)
        has_b = np.any(B[:, :, tau] != 0)
        if has_a and has_b:
            raise InvalidColumnType(f"time slot {tau} carries both symbols and conjugates")
        types.append(CONJUGATE if has_b else PLAIN)
    return tuple(types)


def from_entries(label, n_t, t, n, entries, grouping, params=None):
    """Build a dispersion code from ``(row, col, symbol, coef, conj)`` terms.

    Each term adds ``coef * x[symbol]`` (or ``coef * conj(x[symbol])``) to
    entry ``(row, col)`` of the unscaled codeword matrix.
    """
    A = np.zeros((n, n_t, t), dtype=complex)
    B = np.zeros((n, n_t, t), dtype=complex)
    for row, col, sym, coef, conj in entries:
        (B if conj else A)[sym, row, col] += coef
    types = _column_types(A, B)
    energy = np.sum(np.abs(A) ** 2) + np.sum(np.abs(B) ** 2)
    scale = float(np.sqrt(t * n_t / energy))
    A.setflags(write=False)
    B.setflags(write=False)
    return LinearDispersionCode(label, n_t, t, n, grouping, A=A, B=B, energy_scale=scale,
                                params=dict(params or {}), column_type=types)


def _direct_energy(gen, n_t, t, n):
    # E||gen(h)||_F^2 for h ~ CN(0, I): entries are a.h + b.conj(h), so the
    # expectation is sum |a_j|^2 + |b_j|^2 = (|gen(e_j)|^2 + |gen(i e_j)|^2) / 2.
    basis = np.eye(n_t, dtype=complex)[:, None, :]
    total = np.sum(np.abs(gen(basis)) ** 2) + np.sum(np.abs(gen(1j * basis)) ** 2)
    return total / 2.0


def from_generator(label, n_t, t, n, gen, grouping, params=None):
    energy = _direct_energy(gen, n_t, t, n)
    scale = float(np.sqrt(t * n_t / energy))
    return LinearDispersionCode(label, n_t, t, n, grouping, gen=gen, energy_scale=scale,
                                params=dict(params or {}), column_type=(DIRECT,) * t)


def identity():
    """Uncoded single-antenna transmission, ``X = x``."""
    return from_entries("identity", 1, 1, 1, [(0, 0, 0, 1, False)], GroupingScheme.single(1))


def alamouti():
    entries = [
        (0, 0, 0, 1, False), (1, 0, 1, 1, False),
        (0, 1, 1, -1, True), (1, 1, 0, 1, True),
    ]
    return from_entries("alamouti", 2, 2, 2, entries, GroupingScheme(((0,), (1,))))


def _qostbc(label, alpha, params=None):
    a, ac = alpha, np.conj(alpha)
    entries = [
        # column 0
        (0, 0, 0, 1, False), (1, 0, 1, 1, False), (2, 0, 2, a, False), (3, 0, 3, a, False),
        # column 1
        (0, 1, 1, -1, True), (1, 1, 0, 1, True), (2, 1, 3, -ac, True), (3, 1, 2, ac, True),
        # column 2
        (0, 2, 2, a, False), (1, 2, 3, a, False), (2, 2, 0, 1, False), (3, 2, 1, 1, False),
        # column 3
        (0, 3, 3, -ac, True), (1, 3, 2, ac, True), (2, 3, 1, -1, True), (3, 3, 0, 1, True),
    ]
    return from_entries(label, 4, 4, 4, entries, GroupingScheme(((0, 2), (1, 3))), params)


def qostbc_tbh():
    """Quasi-orthogonal code built from two interleaved Alamouti blocks."""
    return _qostbc("qostbc_tbh", 1.0)


def qostbc_rot(alpha=np.exp(1j * np.pi / 4)):
    """Quasi-orthogonal code with the second symbol pair rotated by ``alpha``."""
    return _qostbc("qostbc_rot", complex(alpha), {"alpha": complex(alpha)})


def code_2x3(theta=DEFAULT_THETA):
    """Rate-4/3 code for two transmit antennas over three slots.

    Rows ``[c x0 + s x1, c x2 + s x3, 0]`` and ``[0, -s x0 + c x1, -s x2 + c x3]``
    with ``c = cos(theta)``, ``s = sin(theta)``.
    """
    c, s = np.cos(theta), np.sin(theta)
    entries = [
        (0, 0, 0, c, False), (0, 0, 1, s, False),
        (0, 1, 2, c, False), (0, 1, 3, s, False),
        (1, 1, 0, -s, False), (1, 1, 1, c, False),
        (1, 2, 2, -s, False), (1, 2, 3, c, False),
    ]
    return from_entries("code_2x3", 2, 3, 4, entries, GroupingScheme(((0, 1), (2, 3))),
                        {"theta": float(theta)})


def _gen_4x6(H, theta):
    c, s = np.cos(theta), np.sin(theta)
    h0, h1, h2, h3 = (H[..., j] for j in range(4))
    g0, g1, g2, g3 = (np.conj(h) for h in (h0, h1, h2, h3))
    z = np.zeros_like(h0)
    rows = [
        [c * h0, s * h0, c * h1, s * h1, z, z, z, z],
        [c * g1, s * g1, -c * g0, -s * g0, z, z, z, z],
        [-s * h2, c * h2, -s * h3, c * h3, c * h0, s * h0, c * h1, s * h1],
        [-s * g3, c * g3, s * g2, -c * g2, c * g1, s * g1, -c * g0, -s * g0],
        [z, z, z, z, -s * h2, c * h2, -s * h3, c * h3],
        [z, z, z, z, -s * g3, c * g3, s * g2, -c * g2],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def code_4x6(theta=DEFAULT_THETA):
    """Rate-4/3 code for four transmit antennas over six slots.

    Defined through its single-antenna equivalent channel. The entry in row 2
    for symbols 6 and 7 is ``(c h1, s h1)``, following the pattern of the
    block for symbols 4 and 5.
    """
    gen = partial(_gen_4x6, theta=float(theta))
    grouping = GroupingScheme(((0, 1), (2, 3), (4, 5), (6, 7)))
    return from_generator("code_4x6", 4, 6, 8, gen, grouping, {"theta": float(theta)})


def _gen_oac_3x8(H):
    h0, h1, h2 = (H[..., j] for j in range(3))
    g0, g1, g2 = (np.conj(h) for h in (h0, h1, h2))
    z = np.zeros_like(h0)
    rows = [
        [g0, z, z, z, z, z],
        [h1, h2, z, z, z, z],
        [g2, -g1, g0, z, z, z],
        [z, h0, h1, h2, z, z],
        [z, z, g2, -g1, g0, z],
        [z, z, z, h0, h1, h2],
        [z, z, z, z, g2, -g1],
        [z, z, z, z, z, h0],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def oac_3x8():
    """Overlapped Alamouti code for three antennas, defined by its equivalent channel."""
    return from_generator("oac_3x8", 3, 8, 6, _gen_oac_3x8, GroupingScheme(((0, 2, 4), (1, 3, 5))))


FACTORIES = {
    "alamouti": alamouti,
    "code_2x3": code_2x3,
    "code_4x6": code_4x6,
    "identity": identity,
    "oac_3x8": oac_3x8,
    "qostbc_rot": qostbc_rot,
    "qostbc_tbh": qostbc_tbh,
}


def build_registry():
    """All built-in codes with default parameters, keyed by label."""
    return {label: factory() for label, factory in sorted(FACTORIES.items())}


def _parse_value(text):
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        return complex(text.replace(" ", ""))


def parse_code_spec(spec):
    """Split ``"code_2x3:theta=0.5536"`` into ``("code_2x3", {"theta": 0.5536})``."""
    label, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"bad code parameter {item!r}")
        params[key.strip()] = _parse_value(value)
    return label.strip(), params


def get_code(spec, **params):
    """Instantiate a code from a label or ``label:key=value`` spec string."""
    label, parsed = parse_code_spec(spec)
    parsed.update(params)
    try:
        factory = FACTORIES[label]
    except KeyError:
        raise KeyError(f"unknown code {label!r}; known: {', '.join(sorted(FACTORIES))}") from None
    return factory(**parsed)


def verify_energy_normalization(code, A, trials=10000, rng=None, energy_scale=None):
    """Monte Carlo estimate of ``tr E{X^H X}`` with i.i.d. uniform symbols.

    ``A`` is a :class:`~picstbc.constellation.Constellation` or an array of
    points. ``energy_scale`` overrides the code's own scale (pass 1.0 to
    inspect the unscaled code).
    """
    if code.direct_only:
        raise DirectOnlyCode(f"code {code.label!r} has no codeword matrices")
    rng = np.random.default_rng(rng)
    pts = A.points if hasattr(A, "points") else np.asarray(A, dtype=complex).ravel()
    x = pts[rng.integers(pts.size, size=(trials, code.n))]
    X = code.encode(x)
    if energy_scale is not None:
        X = X * (energy_scale / code.energy_scale)
    return float(np.mean(np.sum(np.abs(X) ** 2, axis=(-2, -1))))
