"""Complex-matrix kernels: projectors, pseudo-inverse, inverse square root.

Every function accepts a single matrix or a stack of matrices with arbitrary
leading batch dimensions, e.g. ``(trials, m, k)``.
"""

import numpy as np

from .errors import NotPositiveDefinite, RankDeficient

#: Relative singular-value threshold for the full-column-rank test.
RANK_TOL = 1e-9

#: Eigenvalue floor for positive-definiteness.
PD_TOL = 1e-12


def hermitian(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _first_bad(mask):
    bad = np.flatnonzero(np.ravel(~mask))
    return int(bad[0]) if bad.size else None


def full_column_rank(M, tol=RANK_TOL, gram=None):
    """Return a boolean (batched) telling whether ``M`` has full column rank.

    A matrix passes when ``sigma_min / sigma_max > tol`` and ``sigma_max > 0``.
    Matrices with zero columns pass trivially; more columns than rows fail.
    Clear passes are screened on the eigenvalues of the Gram matrix; anything
    within reach of the threshold is settled by an SVD.
    """
    M = np.asarray(M)
    m, k = M.shape[-2:]
    batch = M.shape[:-2]
    if k == 0:
        return np.ones(batch, dtype=bool)
    if k > m:
        return np.zeros(batch, dtype=bool)
    if gram is None:
        gram = hermitian(M) @ M
    lam = np.linalg.eigvalsh(gram)
    with np.errstate(invalid="ignore", divide="ignore"):
        ok = np.asarray((lam[..., -1] > 0) & (lam[..., 0] > _SCREEN * lam[..., -1]))
    unsure = ~ok
    if np.any(unsure):
        s = np.linalg.svd(M[unsure], compute_uv=False)
        smax, smin = s[..., 0], s[..., -1]
        with np.errstate(invalid="ignore", divide="ignore"):
            verdict = (smax > 0) & (smin > tol * smax)
        if ok.ndim == 0:
            return bool(verdict[0]) if verdict.ndim else bool(verdict)
        ok[unsure] = verdict
    return ok


# eigenvalue ratio above which the Gram screen is conclusive (sigma ratio > 1e-5)
_SCREEN = 1e-10


def _check_rank(M, tol, gram=None):
    ok = full_column_rank(M, tol, gram)
    if not np.all(ok):
        idx = _first_bad(np.asarray(ok))
        raise RankDeficient("matrix is not full column rank", index=idx)


def _whitened_adjoint(M, gram):
    # L^{-1} M^H with L the Cholesky factor of the Gram matrix M^H M
    try:
        L = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient("Gram matrix is not positive definite") from exc
    return np.linalg.solve(L, hermitian(M))


def column_space_projector(M, tol=RANK_TOL):
    """Orthogonal projector onto the column span of ``M``.

    Computes ``M (M^H M)^{-1} M^H`` as ``Z^H Z`` with ``Z = L^{-1} M^H`` where
    ``L L^H`` is the Cholesky factorisation of the Gram matrix, so the result
    is Hermitian by construction. An empty ``M`` (zero columns) gives the
    zero matrix.

    Raises
    ------
    RankDeficient
        If ``M`` fails the rank test of :func:`full_column_rank`.
    """
    M = np.asarray(M, dtype=complex)
    m, k = M.shape[-2:]
    if k == 0:
        return np.zeros(M.shape[:-2] + (m, m), dtype=complex)
    gram = hermitian(M) @ M
    _check_rank(M, tol, gram)
    Z = _whitened_adjoint(M, gram)
    return hermitian(Z) @ Z


def complement_projector(M, tol=RANK_TOL):
    """Projector onto the orthogonal complement of the column span of ``M``.

    ``I - column_space_projector(M)``; equals the identity when ``M`` has no
    columns.
    """
    M = np.asarray(M, dtype=complex)
    m = M.shape[-2]
    return np.eye(m, dtype=complex) - column_space_projector(M, tol)


def pseudo_inverse(G, tol=RANK_TOL):
    """Left inverse ``(G^H G)^{-1} G^H`` of a full-column-rank matrix."""
    G = np.asarray(G, dtype=complex)
    Gh = hermitian(G)
    gram = Gh @ G
    _check_rank(G, tol, gram)
    return np.linalg.solve(gram, Gh)


def inverse_sqrt_hermitian(K, tol=PD_TOL):
    """Hermitian ``S`` with ``S K S = I`` for Hermitian positive definite ``K``.

    Uses the eigendecomposition ``K = V diag(w) V^H`` and returns
    ``V diag(w^{-1/2}) V^H``.
    """
    K = np.asarray(K, dtype=complex)
    w, V = np.linalg.eigh(K)
    if np.any(w <= tol * np.maximum(1.0, np.abs(w[..., -1:]))):
        raise NotPositiveDefinite("matrix has a non-positive eigenvalue")
    return (V * (1.0 / np.sqrt(w))[..., None, :]) @ hermitian(V)


def span_complement_projector(M, tol=RANK_TOL):
    """Complement projector that tolerates rank-deficient ``M``.

    Projects onto the orthogonal complement of the numerical column span of
    ``M`` (singular values below ``tol * sigma_max`` are dropped). Used by
    criterion checks and decode ordering, where degenerate channels are the
    point of interest rather than an error.
    """
    M = np.asarray(M, dtype=complex)
    m, k = M.shape[-2:]
    eye = np.eye(m, dtype=complex)
    if k == 0:
        return np.broadcast_to(eye, M.shape[:-2] + (m, m)).copy()
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    smax = s[..., :1]
    keep = (s > tol * smax) & (smax > 0)
    Uk = U * keep[..., None, :]
    return eye - Uk @ hermitian(Uk)
