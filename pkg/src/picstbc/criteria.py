"""Numerical checks of the full-diversity conditions for group decoding.

Two conditions must hold for a code to reach full diversity under PIC group
decoding with a given grouping:

* full rank: every nonzero difference codeword has rank ``n_t``; equivalently
  ``G(h) dx != 0`` for every ``h != 0`` and every nonzero ``dx`` in the
  difference set;
* group independence: for every ``h != 0`` no column of a group lies in the
  span of the columns of all other groups.

Sampling can refute a condition but only gives evidence for it. A passing
report means "no violation found in ``trials_used`` trials", not a proof.
"""

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Optional

import numpy as np

from .constellation import difference_set
from .equivchan import GroupingScheme, equivalent_channel_matrix
from .numerics import RANK_TOL, span_complement_projector

#: Minimum normalised residual ``||P g|| / ||g||`` for group independence.
INDEPENDENCE_THRESHOLD = 1e-6


@dataclass
class CriterionReport:
    name: str
    passed: bool
    witness: Optional[np.ndarray]
    min_margin: float
    trials_used: int
    details: dict = field(default_factory=dict)

    def summary(self):
        verdict = "PASS" if self.passed else "FAIL"
        text = (f"{self.name}: {verdict} (min margin {self.min_margin:.3e}, "
                f"{self.trials_used} trials)")
        if not self.passed and self.witness is not None:
            text += f" witness={np.array2string(np.asarray(self.witness), precision=6)}"
        return text


def channel_basis(code):
    """``G(e_j)`` and ``G(i e_j)`` for a single receive antenna.

    Returns a ``(2 n_t, m, n)`` array; ``G(h)`` is real-linear in ``h``, so
    ``G(h) = sum_j Re(h_j) G(e_j) + Im(h_j) G(i e_j)``.
    """
    eye = np.eye(code.n_t, dtype=complex)[:, None, :]
    return np.concatenate([equivalent_channel_matrix(code, eye),
                           equivalent_channel_matrix(code, 1j * eye)])


def _real_response(basis, dx):
    # columns map (Re h, Im h) -> stacked (Re, Im) of G(h) dx
    v = np.einsum("jmn,bn->bmj", basis, dx)
    return np.concatenate([v.real, v.imag], axis=1)


def _sv_ratio(M, rank):
    s = np.linalg.svd(M, compute_uv=False)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s[..., 0] > 0, s[..., rank - 1] / s[..., 0], 0.0)


def difference_vectors(A, n, budget, rng=None):
    """Nonzero difference vectors to test, and whether the set is exhaustive.

    All of ``dA^n \\ {0}`` when it fits in ``budget``; otherwise every vector
    with at most two nonzero entries followed by uniform samples up to
    ``budget``.
    """
    dA = difference_set(A)
    nz = dA[np.abs(dA) > 1e-12]
    K = dA.size
    if K ** n - 1 <= budget:
        idx = np.array(list(product(range(K), repeat=n)))
        dx = dA[idx]
        return dx[np.any(np.abs(dx) > 1e-12, axis=1)], True
    rows = []
    for a in range(n):
        for v in nz:
            row = np.zeros(n, dtype=complex)
            row[a] = v
            rows.append(row)
    for a, b in combinations(range(n), 2):
        for v, w in product(nz, nz):
            row = np.zeros(n, dtype=complex)
            row[a], row[b] = v, w
            rows.append(row)
    structured = np.array(rows)
    rng = np.random.default_rng(rng)
    extra = max(0, budget - len(structured))
    sample = dA[rng.integers(K, size=(extra, n))]
    sample = sample[np.any(np.abs(sample) > 1e-12, axis=1)]
    return np.concatenate([structured, sample])[:max(budget, len(structured))], False


def codeword_rank_margin(code, dx):
    """``sigma_{n_t} / sigma_1`` of the difference codewords ``encode(dx)``."""
    return _sv_ratio(code.encode(np.atleast_2d(dx)), code.n_t)


def channel_rank_margin(code, dx, basis=None):
    """Normalised ``min_{||h||=1} ||G(h) dx||`` (single receive antenna).

    Computed as the ratio of extreme singular values of the real-linear map
    ``h -> G(h) dx``; zero exactly when some ``h != 0`` annihilates ``dx``.
    """
    basis = channel_basis(code) if basis is None else basis
    return _sv_ratio(_real_response(basis, np.atleast_2d(dx)), 2 * code.n_t)


def annihilating_channel(code, dx):
    """Unit-norm ``h`` minimising ``||G(h) dx||``."""
    M = _real_response(channel_basis(code), np.atleast_2d(dx))[0]
    _, _, vt = np.linalg.svd(M)
    v = vt[-1]
    h = v[:code.n_t] + 1j * v[code.n_t:]
    return h / np.linalg.norm(h)


def check_full_rank(code, A, budget=100_000, tol=RANK_TOL, rng=None, chunk=20_000):
    """Full-rank condition over the difference set of ``A``.

    Dispersion codes are judged in the codeword domain (rank of
    ``encode(dx)``) and cross-checked in the channel domain (``G(h) dx != 0``
    for all ``h``); ``details["domains_agree"]`` records whether both verdicts
    coincide on every tested vector. Codes defined only by their equivalent
    channel are judged in the channel domain alone. The witness is the
    sparsest failing vector.
    """
    dxs, exhaustive = difference_vectors(A, code.n, budget, rng)
    basis = channel_basis(code)
    chan = np.concatenate([channel_rank_margin(code, dxs[i:i + chunk], basis)
                           for i in range(0, len(dxs), chunk)])
    chan_ok = chan > tol
    details = {"exhaustive": exhaustive, "domain": "channel"}
    if not code.direct_only:
        cw = np.concatenate([codeword_rank_margin(code, dxs[i:i + chunk])
                             for i in range(0, len(dxs), chunk)])
        cw_ok = cw > tol
        details["domain"] = "codeword"
        details["domains_agree"] = bool(np.array_equal(cw_ok, chan_ok))
        ok, margin = cw_ok, cw
    else:
        ok, margin = chan_ok, chan
    passed = bool(np.all(ok))
    witness = None
    if not passed:
        # sparsest failing vector, earliest in enumeration order among ties
        bad = np.flatnonzero(~ok)
        support = np.count_nonzero(np.abs(dxs[bad]) > 1e-12, axis=1)
        witness = dxs[bad[np.argmin(support)]]
        details["witness_h"] = annihilating_channel(code, witness)
        details["failures"] = int(np.count_nonzero(~ok))
        details["failing"] = dxs[bad]
    return CriterionReport("full rank", passed, witness, float(np.min(margin)), len(dxs), details)


def structured_channels(l):
    """Standard basis vectors and all two-sparse ``(1, u)`` patterns, ``u in {1, -1, i, -i}``."""
    rows = [np.eye(l, dtype=complex)[j] for j in range(l)]
    for a, b in combinations(range(l), 2):
        for u in (1, -1, 1j, -1j):
            h = np.zeros(l, dtype=complex)
            h[a], h[b] = 1, u
            rows.append(h / np.linalg.norm(h))
    return np.array(rows)


def independence_margins(code, scheme, H):
    """``min ||P_k g|| / ||g||`` over all columns, per channel in ``H`` (``(B, n_r, n_t)``).

    Also returns the (group, symbol) position of each minimum.
    """
    scheme = scheme if isinstance(scheme, GroupingScheme) else GroupingScheme(scheme)
    G = equivalent_channel_matrix(code, H)
    B = G.shape[0]
    best = np.full(B, np.inf)
    where = np.zeros((B, 2), dtype=int)
    for k, group in enumerate(scheme):
        P = span_complement_projector(G[..., list(scheme.complement(k))])
        Gk = G[..., list(group)]
        num = np.linalg.norm(P @ Gk, axis=-2)
        den = np.linalg.norm(Gk, axis=-2)
        with np.errstate(invalid="ignore", divide="ignore"):
            rho = np.where(den > 0, num / den, 0.0)
        j = np.argmin(rho, axis=1)
        r = rho[np.arange(B), j]
        better = r < best
        best = np.where(better, r, best)
        where[better] = np.stack([np.full(B, k), np.array(group)[j]], axis=1)[better]
    return best, where


def check_group_independence(code, scheme, n_r=1, random_trials=10_000,
                             threshold=INDEPENDENCE_THRESHOLD, rng=None, chunk=5_000):
    """Group-independence condition over random and structured channels.

    The trial plan is every standard basis vector and two-sparse ``+-1, +-i``
    pattern of ``h = vec(H)`` (receive antenna major), followed by
    ``random_trials`` Gaussian channels.
    """
    rng = np.random.default_rng(rng)
    l = n_r * code.n_t
    hs = structured_channels(l)
    gauss = (rng.standard_normal((random_trials, l)) + 1j * rng.standard_normal((random_trials, l))) / np.sqrt(2)
    hs = np.concatenate([hs, gauss])
    H = hs.reshape(-1, n_r, code.n_t)
    margins, where = [], []
    for i in range(0, len(H), chunk):
        m, w = independence_margins(code, scheme, H[i:i + chunk])
        margins.append(m)
        where.append(w)
    margins = np.concatenate(margins)
    where = np.concatenate(where)
    ok = margins > threshold
    passed = bool(np.all(ok))
    witness = None
    details = {"threshold": threshold, "structured": len(hs) - random_trials}
    if not passed:
        first = int(np.flatnonzero(~ok)[0])
        witness = hs[first]
        details["group"], details["symbol"] = (int(v) for v in where[first])
        details["failures"] = int(np.count_nonzero(~ok))
    return CriterionReport("group independence", passed, witness, float(np.min(margins)), len(hs), details)


def recheck_independence(code, scheme, h, n_r=1):
    """Margin at one channel vector; used to re-verify a failure witness."""
    H = np.asarray(h, dtype=complex).reshape(1, n_r, code.n_t)
    return float(independence_margins(code, scheme, H)[0][0])


def gram_determinant(code, H):
    """``det(G^H G)`` for each channel in ``H``."""
    G = equivalent_channel_matrix(code, H)
    return np.real(np.linalg.det(np.conj(np.swapaxes(G, -1, -2)) @ G))


def estimate_determinant_constant(code, samples=10_000, n_r=1, rng=None):
    """Smallest ``det(G(h)^H G(h))`` over sampled unit-norm ``h``.

    Samples are the structured channel set plus uniform points on the unit
    sphere. Requires ``n <= m``.
    """
    m = n_r * code.t
    if code.n > m:
        raise ValueError(f"determinant bound needs n <= m, but n={code.n} > m={m}")
    rng = np.random.default_rng(rng)
    l = n_r * code.n_t
    h = (rng.standard_normal((samples, l)) + 1j * rng.standard_normal((samples, l)))
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    h = np.concatenate([structured_channels(l), h])
    return float(np.min(gram_determinant(code, h.reshape(-1, n_r, code.n_t))))
