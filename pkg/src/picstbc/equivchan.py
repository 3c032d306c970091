"""Equivalent channel construction and grouped-column views.

For a code transmitted over ``Y = sqrt(SNR / n_t) H X + W`` this module
builds the matrix ``G(h)`` and the matching received-vector transform so that
``y = sqrt(SNR) G x + w`` with white ``w``. The ``1/sqrt(n_t)`` power split and
the code's energy scale are absorbed into ``G``.

Row layout of ``G`` and ``y``: receive antenna major, time slot minor.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DirectOnlyCode, InvalidColumnType

PLAIN = "plain"
CONJUGATE = "conjugate"
DIRECT = "direct-only"


@dataclass(frozen=True)
class GroupingScheme:
    """A partition of the symbol indices ``0..n-1`` into decoding groups."""

    groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if any(len(g) == 0 for g in groups):
            raise ValueError("grouping contains an empty group")
        flat = [i for g in groups for i in g]
        if len(set(flat)) != len(flat):
            raise ValueError("groups of a grouping scheme must be disjoint")
        if sorted(flat) != list(range(len(flat))):
            raise ValueError(f"groups must cover 0..{len(flat) - 1} exactly")

    @classmethod
    def parse(cls, text):
        """Parse ``"0,2|1,3"``: groups split by ``|``, indices by ``,``."""
        try:
            groups = [[int(tok) for tok in part.split(",") if tok.strip()]
                      for part in text.strip().split("|")]
        except ValueError:
            raise ValueError(f"bad grouping {text!r}") from None
        return cls(tuple(tuple(g) for g in groups))

    @classmethod
    def single(cls, n):
        return cls((tuple(range(n)),))

    @classmethod
    def per_symbol(cls, n):
        return cls(tuple((i,) for i in range(n)))

    @property
    def n(self):
        return sum(len(g) for g in self.groups)

    def complement(self, k):
        """Indices outside group ``k``, in the order of the remaining groups."""
        return tuple(i for j, g in enumerate(self.groups) if j != k for i in g)

    def __len__(self):
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    def __getitem__(self, k):
        return self.groups[k]

    def __str__(self):
        return "|".join(",".join(str(i) for i in g) for g in self.groups)


@dataclass(frozen=True, eq=False)
class EquivalentChannel:
    """``G`` (``m x n``, or stacked ``(..., m, n)``) with the channel it came from."""

    G: np.ndarray
    h: np.ndarray
    code_label: str = ""

    @property
    def m(self):
        return self.G.shape[-2]

    @property
    def n(self):
        return self.G.shape[-1]

    def columns(self, idx):
        return self.G[..., list(idx)]


def _channel_matrix(code, H):
    H = np.asarray(H, dtype=complex)
    if H.ndim == 1:
        H = H[None, :]
    if H.shape[-1] != code.n_t:
        raise ValueError(f"channel has {H.shape[-1]} transmit antennas, code needs {code.n_t}")
    return H


def equivalent_channel_matrix(code, H):
    """Raw ``G`` for channel ``H`` of shape ``(..., n_r, n_t)``.

    Returns an array of shape ``(..., n_r * t, n)``.
    """
    H = _channel_matrix(code, H)
    factor = code.energy_scale / np.sqrt(code.n_t)
    if code.direct_only:
        blocks = code.gen(H)  # (..., n_r, t, n)
        G = factor * blocks
    else:
        types = code.column_type
        if any(ct not in (PLAIN, CONJUGATE) for ct in types):
            raise InvalidColumnType(f"code {code.label!r} mixes plain and conjugated symbols in a column")
        plain = np.array([ct == PLAIN for ct in types])
        # (..., r, tau, i) = sum_j h[r, j] A[i, j, tau], as one matmul per term
        n, n_t, t = code.A.shape
        A2 = np.transpose(code.A, (1, 2, 0)).reshape(n_t, t * n)
        B2 = np.transpose(np.conj(code.B), (1, 2, 0)).reshape(n_t, t * n)
        shape = H.shape[:-1] + (t, n)
        G_plain = (H @ A2).reshape(shape)
        G_conj = (np.conj(H) @ B2).reshape(shape)
        G = factor * np.where(plain[:, None], G_plain, G_conj)
    return G.reshape(G.shape[:-3] + (-1, code.n))


def build_equivalent_channel(code, H):
    """Equivalent channel of ``code`` for channel matrix ``H`` (``n_r x n_t``)."""
    H = _channel_matrix(code, H)
    return EquivalentChannel(equivalent_channel_matrix(code, H), H.reshape(H.shape[:-2] + (-1,)), code.label)


def receive_transform(code, Y):
    """Map a received block ``Y`` (``n_r x t``) to the vector ``y``.

    Conjugate time slots are conjugated; rows are flattened receive antenna
    major. Direct-only codes have no codeword-domain model and raise
    :class:`DirectOnlyCode`.
    """
    if code.direct_only:
        raise DirectOnlyCode(f"code {code.label!r} is defined only through its equivalent channel")
    Y = np.asarray(Y, dtype=complex)
    if Y.ndim == 1:
        Y = Y[None, :]
    types = code.column_type
    if any(ct not in (PLAIN, CONJUGATE) for ct in types):
        raise InvalidColumnType(f"code {code.label!r} mixes plain and conjugated symbols in a column")
    conj = np.array([ct == CONJUGATE for ct in types])
    out = np.where(conj, np.conj(Y), Y)
    return out.reshape(out.shape[:-2] + (-1,))


def group_columns(E, scheme, k):
    """``(G_k, G_k^c)``: the columns of group ``k`` and of all other groups.

    The complement keeps the order of the remaining groups, each in its own
    index order.
    """
    G = E.G if isinstance(E, EquivalentChannel) else np.asarray(E)
    return G[..., list(scheme[k])], G[..., list(scheme.complement(k))]


def verify_norm_identity(code, trials=1000, n_r=1, A=None, rng=None):
    """Largest gap between codeword-domain and equivalent-channel distances.

    Over random ``(H, x1, x2)`` compares ``||H (X1 - X2)||_F / sqrt(n_t)`` with
    ``||G (x1 - x2)||``. The ``1/sqrt(n_t)`` is the power split of the channel
    model, which ``G`` carries. Symbols are drawn from ``A`` when given,
    otherwise complex Gaussian.
    """
    if code.direct_only:
        raise DirectOnlyCode(f"code {code.label!r} has no codeword matrices")
    rng = np.random.default_rng(rng)
    H = (rng.standard_normal((trials, n_r, code.n_t)) + 1j * rng.standard_normal((trials, n_r, code.n_t))) / np.sqrt(2)
    if A is None:
        x = (rng.standard_normal((2, trials, code.n)) + 1j * rng.standard_normal((2, trials, code.n))) / np.sqrt(2)
    else:
        pts = A.points if hasattr(A, "points") else np.asarray(A)
        x = pts[rng.integers(pts.size, size=(2, trials, code.n))]
    dX = code.encode(x[0]) - code.encode(x[1])
    lhs = np.linalg.norm(H @ dX, axis=(-2, -1)) / np.sqrt(code.n_t)
    G = equivalent_channel_matrix(code, H)
    rhs = np.linalg.norm(G @ (x[0] - x[1])[..., None], axis=(-2, -1))
    return float(np.max(np.abs(lhs - rhs)))
