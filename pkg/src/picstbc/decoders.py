"""ML, ZF, MMSE, PIC, PIC-SIC, AO and AO-SIC decoders.

All decoders work on the model ``y = sqrt(snr) G x + w`` and accept either a
single channel (``G`` of shape ``(m, n)``, ``y`` of shape ``(m,)``) or a stack
of independent trials (``(B, m, n)`` and ``(B, m)``). Exhaustive searches
enumerate candidates in lexicographic order of symbol indices (last symbol
fastest) and keep the first minimum, so every decoder shares one tie rule.
"""

from dataclasses import dataclass
from itertools import permutations
from typing import Optional

import numpy as np

from .constellation import Constellation, slice_symbols
from .equivchan import EquivalentChannel, GroupingScheme
from .errors import BudgetExceeded, GroupUndecodable, RankDeficient
from .numerics import (RANK_TOL, complement_projector, hermitian, inverse_sqrt_hermitian,
                       pseudo_inverse, span_complement_projector)

#: Largest exhaustive search allowed, in bits (``n_k * log2 |A|``).
MAX_SEARCH_BITS = 24

# bound on B * m * C complex entries held at once during a search
_CHUNK_ELEMS = 1 << 20

DECODERS = ("ml", "zf", "mmse", "pic", "pic-sic", "ao", "ao-sic")


@dataclass
class DecodeResult:
    """Decisions as indices into the constellation.

    ``metric`` is the minimised objective: the squared distance for ML, the
    sum of the per-group squared distances for group decoders, and the summed
    squared slicing distance for ZF/MMSE. ``per_group_order`` records the
    decoding order of SIC variants.
    """

    symbol_indices: np.ndarray
    metric: np.ndarray
    per_group_order: Optional[np.ndarray] = None

    def symbols(self, A):
        return A.points[self.symbol_indices]


def _points(A):
    return A.points if isinstance(A, Constellation) else np.asarray(A, dtype=complex)


def _unpack(E, y):
    G = E.G if isinstance(E, EquivalentChannel) else np.asarray(E)
    G = np.asarray(G, dtype=complex)
    y = np.asarray(y, dtype=complex)
    batch = G.shape[:-2]
    if y.shape[:-1] != batch:
        y = np.broadcast_to(y, batch + y.shape[-1:])
    m, n = G.shape[-2:]
    return G.reshape(-1, m, n), y.reshape(-1, m), batch


def _pack(batch, idx, metric, order=None):
    n = idx.shape[-1]
    out = DecodeResult(idx.reshape(batch + (n,)), metric.reshape(batch))
    if order is not None:
        out.per_group_order = order.reshape(batch + order.shape[-1:])
    return out


def candidate_count(size, k):
    return size ** k


def candidates(size, k, start=0, stop=None):
    """Index vectors ``[start, stop)`` of ``{0..size-1}^k`` in lexicographic order."""
    total = size ** k
    stop = total if stop is None else min(stop, total)
    flat = np.arange(start, stop)
    if k == 0:
        return np.zeros((flat.size, 0), dtype=int)
    return np.stack(np.unravel_index(flat, (size,) * k), axis=-1)


def _check_budget(size, k):
    bits = k * np.log2(size)
    if bits > MAX_SEARCH_BITS + 1e-9:
        raise BudgetExceeded(f"search over {size}^{k} points exceeds 2^{MAX_SEARCH_BITS}")


def search(target, basis, A, snr):
    """Exhaustive ``argmin ||target - sqrt(snr) basis x||^2`` over ``x in A^k``.

    ``target`` is ``(B, m)`` and ``basis`` ``(B, m, k)``. Returns
    ``(indices (B, k), squared metric (B,))``.
    """
    pts = _points(A)
    B, m, k = basis.shape
    _check_budget(pts.size, k)
    total = pts.size ** k
    sq = np.sqrt(snr)
    best = np.full(B, np.inf)
    best_c = np.zeros(B, dtype=np.int64)
    c_step = int(min(total, max(1, _CHUNK_ELEMS // max(m, 1))))
    b_step = int(max(1, _CHUNK_ELEMS // (m * c_step)))
    for c0 in range(0, total, c_step):
        idx = candidates(pts.size, k, c0, c0 + c_step)
        X = pts[idx].T  # (k, C)
        for b0 in range(0, B, b_step):
            sl = slice(b0, b0 + b_step)
            r = target[sl, :, None] - sq * (basis[sl] @ X)
            d = np.sum(r.real ** 2 + r.imag ** 2, axis=1)
            j = np.argmin(d, axis=1)
            dj = d[np.arange(d.shape[0]), j]
            better = dj < best[sl]
            best[sl] = np.where(better, dj, best[sl])
            best_c[sl] = np.where(better, j + c0, best_c[sl])
    return np.stack(np.unravel_index(best_c, (pts.size,) * k), axis=-1).reshape(B, k), best


def ml_decode(E, y, A, snr):
    """Joint maximum-likelihood decision over all of ``A^n``."""
    G, y, batch = _unpack(E, y)
    idx, metric = search(y, G, A, snr)
    return _pack(batch, idx, metric)


def zf_decode(E, y, A, snr):
    """Zero forcing: ``G^+ y / sqrt(snr)`` sliced symbol by symbol."""
    G, y, batch = _unpack(E, y)
    est = (pseudo_inverse(G) @ y[..., None])[..., 0] / np.sqrt(snr)
    idx = slice_symbols(est, A)
    metric = np.sum(np.abs(est - _points(A)[idx]) ** 2, axis=-1)
    return _pack(batch, idx, metric)


def mmse_statistics(G, y, snr):
    """Unbiased MMSE estimates ``g_k^H K_k^{-1} y / (sqrt(snr) g_k^H K_k^{-1} g_k)``.

    ``K_k = I + snr * sum_{i != k} g_i g_i^H`` is built per symbol.
    """
    B, m, n = G.shape
    out = np.empty((B, n), dtype=complex)
    eye = np.eye(m)
    for k in range(n):
        rest = np.delete(G, k, axis=-1)
        K = eye + snr * (rest @ hermitian(rest))
        g = G[..., k]
        v = np.linalg.solve(K, g[..., None])[..., 0]
        num = np.sum(np.conj(v) * y, axis=-1)
        den = np.sum(np.conj(v) * g, axis=-1).real
        out[:, k] = num / (np.sqrt(snr) * den)
    return out


def mmse_decode(E, y, A, snr):
    """Symbol-wise unbiased MMSE estimate, sliced."""
    G, y, batch = _unpack(E, y)
    est = mmse_statistics(G, y, snr)
    idx = slice_symbols(est, A)
    metric = np.sum(np.abs(est - _points(A)[idx]) ** 2, axis=-1)
    return _pack(batch, idx, metric)


def _projected(Gk, Gint, group):
    """``(P, P Gk)`` cancelling the interference columns ``Gint``.

    Returns ``P = None`` when there is no interference.
    """
    if Gint.shape[-1] == 0:
        return None, Gk
    try:
        P = complement_projector(Gint)
    except RankDeficient as exc:
        raise RankDeficient(f"interference columns of group {group} are not full column rank",
                            index=exc.index) from None
    PG = P @ Gk
    energy = np.linalg.norm(PG, axis=(-2, -1))
    ref = np.linalg.norm(Gk, axis=(-2, -1))
    dead = ~(energy > RANK_TOL * ref)
    if np.any(dead):
        bad = int(np.flatnonzero(dead)[0])
        raise GroupUndecodable(f"group {group} has no energy left after interference cancellation",
                               group=group, index=bad)
    return P, PG


def _pic_stage(y, Gk, Gint, A, snr, group):
    P, PG = _projected(Gk, Gint, group)
    z = y if P is None else (P @ y[..., None])[..., 0]
    return search(z, PG, A, snr)


def _ao_stage(y, Gk, Gint, A, snr, group):
    if Gint.shape[-1] == 0:
        return search(y, Gk, A, snr)
    m = Gk.shape[-2]
    K = np.eye(m) + snr * (Gint @ hermitian(Gint))
    S = inverse_sqrt_hermitian(K)
    return search((S @ y[..., None])[..., 0], S @ Gk, A, snr)


def _group_decode(E, y, scheme, A, snr, stage):
    G, y, batch = _unpack(E, y)
    scheme = _scheme(scheme, G.shape[-1])
    idx = np.zeros((G.shape[0], G.shape[-1]), dtype=np.int64)
    metric = np.zeros(G.shape[0])
    for k, group in enumerate(scheme):
        Gk = G[..., list(group)]
        Gint = G[..., list(scheme.complement(k))]
        gi, gm = stage(y, Gk, Gint, A, snr, k)
        idx[:, list(group)] = gi
        metric += gm
    return _pack(batch, idx, metric)


def _scheme(scheme, n):
    if scheme is None:
        return GroupingScheme.per_symbol(n)
    if not isinstance(scheme, GroupingScheme):
        scheme = GroupingScheme(scheme)
    if scheme.n != n:
        raise ValueError(f"grouping covers {scheme.n} symbols but the channel has {n}")
    return scheme


def pic_decode(E, y, scheme, A, snr):
    """Partial interference cancellation group decoding.

    Each group is decoded independently: the received vector is projected
    onto the orthogonal complement of the other groups' columns and the group
    is found by exhaustive search on the projected system.

    Raises
    ------
    RankDeficient
        If the other groups' columns are not full column rank.
    GroupUndecodable
        If the projection leaves a group with no energy.
    """
    return _group_decode(E, y, scheme, A, snr, _pic_stage)


def ao_decode(E, y, scheme, A, snr):
    """Asymptotically optimal group decoding.

    Other groups are treated as Gaussian noise with covariance
    ``K = I + snr * sum g_i g_i^H``; the residual is whitened by ``K^{-1/2}``
    and minimised.
    """
    return _group_decode(E, y, scheme, A, snr, _ao_stage)


def default_ordering(E, scheme):
    """Decoding order by descending smallest singular value of ``P_k G_k``.

    ``P_k`` cancels all other groups (rank-deficient interference is
    tolerated here). Scores are compared relative to ``||G||_F``; scores equal
    to 12 decimal places are ties and keep the lower group index first.
    """
    G = E.G if isinstance(E, EquivalentChannel) else np.asarray(E, dtype=complex)
    batch = G.shape[:-2]
    G = G.reshape((-1,) + G.shape[-2:])
    scheme = _scheme(scheme, G.shape[-1])
    scores = np.empty((G.shape[0], len(scheme)))
    for k, group in enumerate(scheme):
        P = span_complement_projector(G[..., list(scheme.complement(k))])
        s = np.linalg.svd(P @ G[..., list(group)], compute_uv=False)
        scores[:, k] = s[..., -1]
    # relative to ||G||_F so that numerically zero scores tie exactly
    top = np.linalg.norm(G, axis=(-2, -1))[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        norm = np.where(top > 0, scores / top, 0.0)
    order = np.argsort(-np.round(norm, 12), axis=1, kind="stable")
    return order.reshape(batch + (len(scheme),))


def _sic_decode(E, y, scheme, A, snr, ordering, stage):
    G, y, batch = _unpack(E, y)
    n = G.shape[-1]
    scheme = _scheme(scheme, n)
    N = len(scheme)
    B = G.shape[0]
    if ordering is None or ordering == "auto":
        orders = default_ordering(G, scheme).reshape(B, N)
    else:
        perm = tuple(int(i) for i in ordering)
        if sorted(perm) != list(range(N)):
            raise ValueError(f"ordering {perm} is not a permutation of the {N} groups")
        orders = np.broadcast_to(np.array(perm), (B, N))
    idx = np.zeros((B, n), dtype=np.int64)
    metric = np.zeros(B)
    pts = _points(A)
    sq = np.sqrt(snr)
    for perm in permutations(range(N)):
        rows = np.flatnonzero(np.all(orders == np.array(perm), axis=1))
        if rows.size == 0:
            continue
        Gs, ys = G[rows], y[rows].copy()
        for pos, k in enumerate(perm):
            group = list(scheme[k])
            rest = [i for j in perm[pos + 1:] for i in scheme[j]]
            Gk = Gs[..., group]
            try:
                gi, gm = stage(ys, Gk, Gs[..., rest], A, snr, k)
            except (GroupUndecodable, RankDeficient) as exc:
                if exc.index is not None:
                    exc.index = int(rows[exc.index])
                raise
            idx[np.ix_(rows, group)] = gi
            metric[rows] += gm
            ys = ys - sq * (Gk @ pts[gi][..., None])[..., 0]
    return _pack(batch, idx, metric, orders)


def pic_sic_decode(E, y, scheme, A, snr, ordering="auto"):
    """PIC group decoding with successive cancellation of decided groups.

    ``ordering`` is ``"auto"`` (per-trial :func:`default_ordering`) or an
    explicit permutation of group indices. At each stage only the groups not
    yet decided are cancelled by projection.
    """
    return _sic_decode(E, y, scheme, A, snr, ordering, _pic_stage)


def ao_sic_decode(E, y, scheme, A, snr, ordering="auto"):
    """AO group decoding with successive cancellation; ``K`` covers remaining groups only."""
    return _sic_decode(E, y, scheme, A, snr, ordering, _ao_stage)


def decode(name, E, y, A, snr, scheme=None, ordering="auto"):
    """Dispatch on decoder name (one of :data:`DECODERS`)."""
    if name == "ml":
        return ml_decode(E, y, A, snr)
    if name == "zf":
        return zf_decode(E, y, A, snr)
    if name == "mmse":
        return mmse_decode(E, y, A, snr)
    if name == "pic":
        return pic_decode(E, y, scheme, A, snr)
    if name == "ao":
        return ao_decode(E, y, scheme, A, snr)
    if name == "pic-sic":
        return pic_sic_decode(E, y, scheme, A, snr, ordering)
    if name == "ao-sic":
        return ao_sic_decode(E, y, scheme, A, snr, ordering)
    raise ValueError(f"unknown decoder {name!r}; choose from {', '.join(DECODERS)}")
