"""Dense linear-algebra kernels: symmetric eigendecomposition, thin QR,
small generalized eigenproblems and the projection metric between subspaces.

All routines fix sign conventions so that outputs are deterministic.
"""
import numpy as np
from scipy import linalg as sla

from .errors import DefinitenessError, InvalidInputError, RankDeficiencyError

_TIE_RTOL = 1e-12


def symmetrize(S):
    """Return ``(S + S.T) / 2`` as a float array, validating shape and finiteness."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidInputError("matrix has non-finite entries")
    return 0.5 * (S + S.T)


def _fix_column_signs(V):
    # largest-magnitude entry of each column positive; near-ties go to the lowest index
    absV = np.abs(V)
    peak = absV.max(axis=0)
    idx = np.argmax(absV >= peak * (1.0 - _TIE_RTOL), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eig(S):
    """Eigendecomposition of a symmetric matrix.

    Returns
    -------
    values : ndarray, shape (p,)
        Eigenvalues in descending order.
    vectors : ndarray, shape (p, p)
        Orthonormal eigenvectors as columns; the largest-magnitude entry of
        each column is positive.
    """
    S = symmetrize(S)
    w, V = np.linalg.eigh(S)
    order = np.argsort(w)[::-1]
    return w[order], _fix_column_signs(V[:, order])


def top_eigvecs(S, d):
    """Eigenvectors of ``S`` for its ``d`` largest eigenvalues."""
    _, V = sym_eig(S)
    return V[:, :d]


def qr_thin(Z, rank_tol=1e-12):
    """Thin QR factorization with a nonnegative diagonal in ``R``.

    Raises
    ------
    RankDeficiencyError
        If the smallest singular value of ``Z`` is at most ``rank_tol`` times
        the largest one.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    p, d = Z.shape
    if d == 0 or d > p:
        raise InvalidInputError(f"cannot factor a {p}x{d} matrix")
    if not np.all(np.isfinite(Z)):
        raise InvalidInputError("matrix has non-finite entries")
    sv = np.linalg.svd(Z, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= rank_tol * sv[0]:
        rank = int(np.sum(sv > rank_tol * sv[0])) if sv[0] > 0 else 0
        raise RankDeficiencyError(f"matrix has numerical rank {rank} < {d}", rank)
    Q, R = np.linalg.qr(Z, mode="reduced")
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs, R * signs[:, None]


def is_orthonormal(Q, tol=1e-10):
    Q = np.asarray(Q, dtype=float)
    return np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))) <= tol


def orthonormalize(U):
    """Orthonormal basis with the same column span as ``U`` (``U`` itself if
    it already is one)."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape[1] == 0:
        raise InvalidInputError("zero-dimensional basis")
    if is_orthonormal(U):
        return U
    return qr_thin(U)[0]


def small_gep(A_t, B_t):
    """Solve ``A_t T = B_t T diag(D)`` with ``T' B_t T = I``.

    Uses Cholesky whitening ``B_t = L L'`` followed by a symmetric
    eigendecomposition of ``L^-1 A_t L^-T``.

    Returns
    -------
    T : ndarray, shape (d, d)
    D : ndarray, shape (d,)
        Generalized eigenvalues in descending order.
    """
    A_t = symmetrize(A_t)
    B_t = symmetrize(B_t)
    if A_t.shape != B_t.shape:
        raise InvalidInputError("A_t and B_t must have the same shape")
    try:
        L = np.linalg.cholesky(B_t)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError("B_t is not positive definite") from exc
    Linv_A = sla.solve_triangular(L, A_t, lower=True)
    C = sla.solve_triangular(L, Linv_A.T, lower=True)
    D, W = sym_eig(C)
    T = sla.solve_triangular(L.T, W, lower=False)
    return _fix_column_signs(T), D


def dense_gep(A, B, d):
    """Top-``d`` generalized eigenpairs of a full ``p x p`` pair via whitening.

    Returns ``(U, values)`` with ``U' B U = I``.
    """
    T, D = small_gep(A, B)
    return T[:, :d], D[:d]


def projection_distance(U1, U2):
    """Largest sine of the principal angles between ``span(U1)`` and ``span(U2)``.

    Only ``min(d1, d2)`` angles are considered. When the dimensions agree this
    is the spectral norm of the difference of the two orthogonal projectors.
    """
    U1 = orthonormalize(U1)
    U2 = orthonormalize(U2)
    if U1.shape[0] != U2.shape[0]:
        raise InvalidInputError("bases live in spaces of different dimension")
    if U1.shape[1] > U2.shape[1]:
        U1, U2 = U2, U1
    # singular values of the residual of U1 off span(U2) are the sines
    resid = U1 - U2 @ (U2.T @ U1)
    s = np.linalg.norm(resid, ord=2)
    return float(min(max(s, 0.0), 1.0))
