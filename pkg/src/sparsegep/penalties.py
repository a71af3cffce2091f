"""Penalized quadratic subproblem

    min_Z  trace(Z' B Z / 2 - Z' M) + p_lam(Z)

for the per-column lasso penalty ``sum_j lam_j * ||z_j||_1`` and the row-wise
group-lasso penalty ``lam * sum_i ||z_i.||_2``. Both are solved by cyclic
coordinate descent (element-wise and row-block respectively).
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DefinitenessError, InvalidInputError

LASSO = "lasso"
GROUP = "group"


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family and its level(s).

    ``lambdas`` holds one value per column for the lasso (a single value is
    broadcast to every column) and exactly one value for the group lasso.
    """

    kind: str
    lambdas: tuple

    def __post_init__(self):
        if self.kind not in (LASSO, GROUP):
            raise InvalidInputError(f"unknown penalty kind {self.kind!r}")
        lams = tuple(float(v) for v in np.atleast_1d(self.lambdas))
        if not lams or any(not np.isfinite(v) or v < 0 for v in lams):
            raise InvalidInputError(f"penalty levels must be finite and >= 0, got {lams}")
        if self.kind == GROUP and len(lams) != 1:
            raise InvalidInputError("the group penalty takes a single level")
        object.__setattr__(self, "lambdas", lams)

    @classmethod
    def lasso(cls, lam, d=None):
        lams = np.atleast_1d(np.asarray(lam, dtype=float))
        if d is not None and lams.size == 1:
            lams = np.repeat(lams, d)
        return cls(LASSO, tuple(lams))

    @classmethod
    def group(cls, lam):
        return cls(GROUP, (float(lam),))

    def column_lambdas(self, d):
        lams = np.asarray(self.lambdas)
        if lams.size == 1:
            return np.repeat(lams, d)
        if lams.size != d:
            raise InvalidInputError(f"expected {d} column levels, got {lams.size}")
        return lams

    def with_level(self, lam):
        """Copy of this penalty with every level set to ``lam``."""
        if self.kind == GROUP:
            return PenaltySpec.group(lam)
        return PenaltySpec(LASSO, (float(lam),) * len(self.lambdas))

    @property
    def level(self):
        return max(self.lambdas)


@dataclass
class InnerSolveConfig:
    max_sweeps: int = 1000
    tol: float = 1e-7
    warm_start: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise InvalidInputError("max_sweeps must be >= 1")
        if not self.tol > 0:
            raise InvalidInputError("tol must be > 0")


@dataclass
class InnerSolution:
    Z: np.ndarray
    converged: bool
    sweeps: int
    history: list = field(default_factory=list)


def soft_threshold(z, lam):
    """``sign(z) * max(|z| - lam, 0)``, elementwise."""
    if lam < 0:
        raise InvalidInputError("threshold must be nonnegative")
    out = np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _check_b(B):
    B = np.ascontiguousarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise InvalidInputError(f"B must be square, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise InvalidInputError("B has non-finite entries")
    if np.any(np.diag(B) <= 0):
        raise DefinitenessError("B has a nonpositive diagonal entry")
    return B


def _start(cfg, shape):
    if cfg.warm_start is None:
        return np.zeros(shape)
    Z0 = np.array(cfg.warm_start, dtype=float, order="C")
    if Z0.shape != shape:
        raise InvalidInputError(f"warm start has shape {Z0.shape}, expected {shape}")
    return Z0


def solve_lasso_column(B, m, lam, cfg=None, record=False, kernels=None):
    """Cyclic coordinate descent for ``z' B z / 2 - z' m + lam * ||z||_1``.

    With ``record=True`` the objective after every sweep is kept in
    ``history`` (index 0 is the starting point).
    """
    cfg = cfg or InnerSolveConfig()
    k = kernels or _kernels
    B = _check_b(B)
    m = np.ascontiguousarray(m, dtype=float).ravel()
    if m.shape[0] != B.shape[0] or not np.all(np.isfinite(m)):
        raise InvalidInputError("m must be finite with length p")
    if lam < 0:
        raise InvalidInputError("lam must be >= 0")
    z = _start(cfg, m.shape)
    bz = B @ z
    if not record:
        sweeps, change = k.lasso_cd(B, m, float(lam), z, bz, cfg.max_sweeps, cfg.tol)
        return InnerSolution(z, change < cfg.tol, sweeps)
    pen = PenaltySpec.lasso(lam)
    history = [penalized_objective(z[:, None], B, m[:, None], pen)]
    change, sweeps = np.inf, 0
    while sweeps < cfg.max_sweeps and not change < cfg.tol:
        _, change = k.lasso_cd(B, m, float(lam), z, bz, 1, cfg.tol)
        sweeps += 1
        history.append(penalized_objective(z[:, None], B, m[:, None], pen))
    return InnerSolution(z, change < cfg.tol, sweeps, history)


def solve_group_rows(B, M, lam, cfg=None, record=False, kernels=None):
    """Block coordinate descent over rows for the group-lasso subproblem.

    Row ``g`` is replaced by ``(1 - lam/||a_g||)_+ a_g / b_gg`` with
    ``a_g = M_g - sum_{i != g} b_gi Z_i``.
    """
    cfg = cfg or InnerSolveConfig()
    k = kernels or _kernels
    B = _check_b(B)
    M = np.ascontiguousarray(M, dtype=float)
    if M.ndim == 1:
        M = np.ascontiguousarray(M[:, None])
    if M.shape[0] != B.shape[0] or not np.all(np.isfinite(M)):
        raise InvalidInputError("M must be finite with p rows")
    if lam < 0:
        raise InvalidInputError("lam must be >= 0")
    Z = _start(cfg, M.shape)
    BZ = np.ascontiguousarray(B @ Z)
    if not record:
        sweeps, change = k.group_cd(B, M, float(lam), Z, BZ, cfg.max_sweeps, cfg.tol)
        return InnerSolution(Z, change < cfg.tol, sweeps)
    pen = PenaltySpec.group(lam)
    history = [penalized_objective(Z, B, M, pen)]
    change, sweeps = np.inf, 0
    while sweeps < cfg.max_sweeps and not change < cfg.tol:
        _, change = k.group_cd(B, M, float(lam), Z, BZ, 1, cfg.tol)
        sweeps += 1
        history.append(penalized_objective(Z, B, M, pen))
    return InnerSolution(Z, change < cfg.tol, sweeps, history)


def solve_penalized(B, M, pen, cfg=None, kernels=None):
    """Dispatch on the penalty family; lasso columns are solved independently."""
    cfg = cfg or InnerSolveConfig()
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if pen.kind == GROUP:
        return solve_group_rows(B, M, pen.lambdas[0], cfg, kernels=kernels)
    lams = pen.column_lambdas(M.shape[1])
    W = cfg.warm_start
    cols, converged, sweeps = [], True, 0
    for j in range(M.shape[1]):
        cj = InnerSolveConfig(cfg.max_sweeps, cfg.tol, None if W is None else W[:, j])
        sol = solve_lasso_column(B, M[:, j], lams[j], cj, kernels=kernels)
        cols.append(sol.Z)
        converged &= sol.converged
        sweeps = max(sweeps, sol.sweeps)
    return InnerSolution(np.column_stack(cols), converged, sweeps)


def _shapes(Z, B, M):
    Z = np.asarray(Z, dtype=float)
    M = np.asarray(M, dtype=float)
    B = np.asarray(B, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if M.ndim == 1:
        M = M[:, None]
    p = B.shape[0]
    if B.shape != (p, p) or Z.shape != M.shape or Z.shape[0] != p:
        raise InvalidInputError(
            f"incompatible shapes Z{Z.shape}, B{B.shape}, M{M.shape}")
    return Z, B, M


def penalty_value(Z, pen):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if pen.kind == GROUP:
        return pen.lambdas[0] * float(np.sum(np.linalg.norm(Z, axis=1)))
    lams = pen.column_lambdas(Z.shape[1])
    return float(np.sum(lams * np.abs(Z).sum(axis=0)))


def penalized_objective(Z, B, M, pen):
    """``trace(Z' B Z / 2 - Z' M) + p_lam(Z)``."""
    Z, B, M = _shapes(Z, B, M)
    smooth = 0.5 * float(np.sum(Z * (B @ Z))) - float(np.sum(Z * M))
    return smooth + penalty_value(Z, pen)


def kkt_residual(Z, B, M, pen):
    """Largest violation of the subgradient optimality conditions.

    Zero entries (rows, for the group penalty) may carry a gradient of size up
    to the penalty level; nonzero ones must balance it exactly. Returns 0 iff
    ``Z`` is optimal.
    """
    Z, B, M = _shapes(Z, B, M)
    G = B @ Z - M
    if pen.kind == GROUP:
        lam = pen.lambdas[0]
        norms = np.linalg.norm(Z, axis=1)
        active = norms > 0
        viol = np.maximum(np.linalg.norm(G[~active], axis=1) - lam, 0.0)
        dirs = Z[active] / norms[active, None]
        viol_a = np.linalg.norm(G[active] + lam * dirs, axis=1)
        return float(max(viol.max(initial=0.0), viol_a.max(initial=0.0)))
    lams = pen.column_lambdas(Z.shape[1])[None, :] * np.ones_like(Z)
    active = Z != 0
    out = np.where(active, np.abs(G + lams * np.sign(Z)),
                   np.maximum(np.abs(G) - lams, 0.0))
    return float(out.max(initial=0.0))
