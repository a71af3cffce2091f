"""Penalized orthogonal iteration (POI) and its one-shot variant (Fast POI)
for the d leading generalized eigenvectors of ``A u = lambda B u``.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import (DefinitenessError, InvalidInputError,
                     OverPenalizationError, RankDeficiencyError)
from .linalg import (_fix_column_signs, projection_distance, qr_thin,
                     small_gep, sym_eig, symmetrize, top_eigvecs)
from .penalties import GROUP, LASSO, InnerSolveConfig, PenaltySpec, solve_penalized

POI = "poi"
FASTPOI = "fastpoi"


def regularize_b(B):
    """Make ``B`` positive definite by adding ``eps * I`` when it is singular.

    ``eps = min(log(p) / rank(B), sigma_B / 2)`` with ``sigma_B`` the smallest
    positive eigenvalue. Eigenvalues at most ``1e-10`` times the largest count
    as zero.

    Returns
    -------
    B_reg : ndarray
    eps : float
        0.0 when ``B`` was already positive definite.
    """
    B = symmetrize(B)
    p = B.shape[0]
    w = np.linalg.eigvalsh(B)
    top = w[-1]
    if top <= 0:
        raise InvalidInputError("B has no positive eigenvalue (rank 0)")
    if w[0] < -1e-8 * np.linalg.norm(B, 2):
        raise InvalidInputError(f"B has a negative eigenvalue {w[0]:.3g}")
    pd_tol = 1e-10 * top
    if w[0] > pd_tol:
        return B, 0.0
    positive = w[w > pd_tol]
    eps = min(math.log(p) / positive.size, positive[0] / 2.0)
    return B + eps * np.eye(p), float(eps)


@dataclass
class GepPair:
    """Symmetric ``A`` with positive definite ``B``.

    Build through :meth:`build`, which symmetrizes both matrices and
    regularizes ``B`` when needed.
    """

    A: np.ndarray
    B: np.ndarray
    regularized: bool = False
    epsilon_used: float = 0.0

    @classmethod
    def build(cls, A, B=None, regularize=True):
        A = symmetrize(A)
        if B is None:
            return cls(A, np.eye(A.shape[0]))
        B = symmetrize(B)
        if B.shape != A.shape:
            raise InvalidInputError(f"A is {A.shape} but B is {B.shape}")
        eps = 0.0
        if regularize:
            B, eps = regularize_b(B)
        try:
            np.linalg.cholesky(B)
        except np.linalg.LinAlgError as exc:
            raise DefinitenessError("B is not positive definite") from exc
        return cls(A, B, eps > 0, eps)

    @property
    def p(self):
        return self.A.shape[0]


@dataclass
class OuterConfig:
    """Settings of the outer iteration.

    ``init`` is ``"eig"`` (top eigenvectors of ``A``), ``"random"`` (a random
    orthonormal basis drawn with ``seed``) or an explicit ``p x d`` basis.
    """

    max_outer: int = 100
    outer_tol: float = 1e-5
    init: Union[str, np.ndarray] = "eig"
    seed: Optional[int] = None
    inner: InnerSolveConfig = field(default_factory=InnerSolveConfig)
    support_tol: float = 1e-8

    def __post_init__(self):
        if self.max_outer < 1:
            raise InvalidInputError("max_outer must be >= 1")
        if not (self.outer_tol > 0 and self.support_tol > 0):
            raise InvalidInputError("tolerances must be > 0")


@dataclass
class SubspaceEstimate:
    Q: np.ndarray
    U: np.ndarray
    eigenvalues: np.ndarray
    support: list
    lam: float
    outer_iters: int
    converged: bool
    padded: bool = False
    method: str = POI

    @property
    def d(self):
        return self.Q.shape[1]


def lambda_max(source, kind, d, method=POI):
    """Smallest penalty level guaranteed to give the trivial solution.

    For POI ``source`` is ``A`` (or a :class:`GepPair`). For Fast POI it is
    either ``V`` (``p x d``) or ``A``/a pair, from which ``V`` is computed.
    The lasso bound is ``max |a_ij|`` (or ``max |v_ij|``); the group bound is
    the largest row norm of ``V`` for Fast POI and, for POI, the largest
    ``sqrt(sum_{j<=d} a_{g,(j)}^2)`` over the ``d`` largest entries of row g
    in absolute value. The POI group value is an upper bound only.
    """
    M = source.A if isinstance(source, GepPair) else np.asarray(source, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if d > M.shape[0]:
        raise InvalidInputError("d exceeds the dimension")
    if method not in (POI, FASTPOI):
        raise InvalidInputError(f"unknown method {method!r}")
    if method == FASTPOI and M.shape[1] == M.shape[0]:
        M = top_eigvecs(M, d)
    elif method == POI and M.shape[1] != M.shape[0]:
        raise InvalidInputError("POI bound needs the square matrix A")
    if kind == LASSO:
        return float(np.max(np.abs(M)))
    if kind != GROUP:
        raise InvalidInputError(f"unknown penalty kind {kind!r}")
    if method == FASTPOI:
        return float(np.max(np.linalg.norm(M, axis=1)))
    top = -np.sort(-np.abs(M), axis=1)[:, :d]
    return float(np.max(np.sqrt(np.sum(top ** 2, axis=1))))


def recover_pair(Q, pair):
    """Generalized eigenvectors and eigenvalues from an orthonormal basis.

    Solves the ``d x d`` problem ``(Q'AQ) T = (Q'BQ) T D`` and returns
    ``(Q T, D)`` with ``D`` descending.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    At = Q.T @ pair.A @ Q
    Bt = Q.T @ pair.B @ Q
    try:
        T, D = small_gep(At, Bt)
    except DefinitenessError as exc:
        raise DefinitenessError("Q'BQ is singular; the basis is degenerate") from exc
    return Q @ T, D


def rayleigh_eigenvalues(U, pair):
    """``u_j' A u_j / u_j' B u_j`` for every column of ``U``."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    return np.sum(U * (pair.A @ U), axis=0) / np.sum(U * (pair.B @ U), axis=0)


def eigenvalues_ls(U, pair):
    """Least-squares eigenvalues ``argmin ||AU - BU diag(l)||_F``.

    Column j gives ``beta_j' alpha_j / beta_j' beta_j`` with ``alpha = AU``
    and ``beta = BU``.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    alpha = pair.A @ U
    beta = pair.B @ U
    bb = np.sum(beta * beta, axis=0)
    if np.any(np.sqrt(bb) <= 1e-12):
        raise InvalidInputError("a column of BU is numerically zero")
    return np.sum(beta * alpha, axis=0) / bb


def _complete_basis(Qk, d, A, rows):
    """Extend an orthonormal ``p x k`` basis to ``d`` columns.

    Candidates are tried in order: leading eigenvectors of ``A`` restricted to
    the active ``rows``, coordinate vectors of those rows, eigenvectors of the
    full ``A``, then all coordinate vectors. Restricting first keeps the row
    support of the estimate intact.
    """
    p = A.shape[0]
    cands = []
    if rows.size:
        _, W = sym_eig(A[np.ix_(rows, rows)])
        E = np.zeros((p, rows.size))
        E[rows] = W
        cands.append(E)
        cands.append(np.eye(p)[:, rows])
    cands.append(sym_eig(A)[1])
    cands.append(np.eye(p))
    cols = [Qk[:, j] for j in range(Qk.shape[1])]
    for block in cands:
        for v in block.T:
            if len(cols) == d:
                break
            w = v.copy()
            for _ in range(2):
                for c in cols:
                    w -= (c @ w) * c
            nrm = np.linalg.norm(w)
            if nrm > 1e-6:
                cols.append(w / nrm)
    return np.column_stack(cols)


def _basis_from(Z, A, support_tol):
    """Orthonormal basis of ``span(Z)``, padded when ``Z`` is rank deficient.

    Returns ``(Q, padded)``.
    """
    try:
        return qr_thin(Z)[0], False
    except RankDeficiencyError as exc:
        k = exc.rank
    d = Z.shape[1]
    Uz = np.linalg.svd(Z, full_matrices=False)[0][:, :k]
    Uz = _fix_column_signs(Uz)
    rows = np.flatnonzero(np.linalg.norm(Z, axis=1) > support_tol)
    return _complete_basis(Uz, d, A, rows), True


def _initial_basis(pair, d, cfg):
    if isinstance(cfg.init, np.ndarray):
        Q0 = np.asarray(cfg.init, dtype=float)
        if Q0.shape != (pair.p, d):
            raise InvalidInputError(f"initial basis has shape {Q0.shape}")
        return qr_thin(Q0)[0]
    if cfg.init == "eig":
        return top_eigvecs(pair.A, d)
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        return qr_thin(rng.standard_normal((pair.p, d)))[0]
    raise InvalidInputError(f"unknown initialization {cfg.init!r}")


def _check_problem(pair, d, pen):
    if not isinstance(pair, GepPair):
        raise InvalidInputError("expected a GepPair")
    if not 1 <= d < pair.p:
        raise InvalidInputError(f"need 1 <= d < p, got d={d}, p={pair.p}")
    if not isinstance(pen, PenaltySpec):
        raise InvalidInputError("expected a PenaltySpec")
    pen.column_lambdas(d)


def _finish(Q, pair, pen, iters, converged, padded, cfg, method):
    U, vals = recover_pair(Q, pair)
    support = np.flatnonzero(np.linalg.norm(Q, axis=1) > cfg.support_tol).tolist()
    return SubspaceEstimate(Q, U, vals, support, pen.level, iters, converged,
                            padded, method)


def poi(pair, d, pen, cfg=None, kernels=None):
    """Penalized orthogonal iteration.

    Alternates ``Z_r = argmin trace(Z'BZ/2 - Z'AQ_{r-1}) + p_lam(Z)`` with
    ``Q_r = qr(Z_r)`` until the projection distance between successive bases
    drops below ``cfg.outer_tol``. Non-convergence is reported through the
    ``converged`` flag.

    Raises
    ------
    OverPenalizationError
        If a penalized solve returns the zero matrix.
    """
    cfg = cfg or OuterConfig()
    _check_problem(pair, d, pen)
    Q = _initial_basis(pair, d, cfg)
    converged, padded, it = False, False, 0
    for it in range(1, cfg.max_outer + 1):
        inner = InnerSolveConfig(cfg.inner.max_sweeps, cfg.inner.tol, Q)
        Z = solve_penalized(pair.B, pair.A @ Q, pen, inner, kernels=kernels).Z
        if not np.any(Z):
            raise OverPenalizationError(
                f"penalty level {pen.level:.6g} zeroes the solution", pen.level)
        Q_new, padded = _basis_from(Z, pair.A, cfg.support_tol)
        step = projection_distance(Q_new, Q)
        Q = Q_new
        if step < cfg.outer_tol:
            converged = True
            break
    return _finish(Q, pair, pen, it, converged, padded, cfg, POI)


def fast_poi(pair, d, pen, cfg=None, kernels=None):
    """One penalized solve with right-hand side ``V`` (top-d eigenvectors of
    ``A``) followed by QR."""
    cfg = cfg or OuterConfig()
    _check_problem(pair, d, pen)
    V = top_eigvecs(pair.A, d)
    sol = solve_penalized(pair.B, V, pen,
                          InnerSolveConfig(cfg.inner.max_sweeps, cfg.inner.tol),
                          kernels=kernels)
    if not np.any(sol.Z):
        raise OverPenalizationError(
            f"penalty level {pen.level:.6g} zeroes the solution", pen.level)
    Q, padded = _basis_from(sol.Z, pair.A, cfg.support_tol)
    return _finish(Q, pair, pen, 1, sol.converged, padded, cfg, FASTPOI)


def fit(pair, d, pen, method=POI, cfg=None, kernels=None):
    if method == POI:
        return poi(pair, d, pen, cfg, kernels)
    if method == FASTPOI:
        return fast_poi(pair, d, pen, cfg, kernels)
    raise InvalidInputError(f"unknown method {method!r}")
