"""Eigenvalue-based cross-validation over a geometric grid of penalty levels."""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import POI, fit, lambda_max
from .errors import InvalidInputError, SparseGepError, TuningError
from .penalties import GROUP, PenaltySpec

log = logging.getLogger(__name__)

MAX_COND = 1e12


def cv_score(U, A2, B2):
    """``trace[(U' B2 U)^-1 U' A2 U]``; NaN if ``U' B2 U`` is numerically singular."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    inner = U.T @ B2 @ U
    if not np.all(np.isfinite(inner)) or np.linalg.cond(inner) >= MAX_COND:
        log.warning("cv_score: U'BU is singular to working precision")
        return float("nan")
    return float(np.trace(np.linalg.solve(inner, U.T @ A2 @ U)))


def lambda_grid(lam_max, ratio=0.75, t=31):
    """``[lam_max * ratio**i for i in 0..t] + [inf]``.

    The trailing ``inf`` stands for the all-zero estimate.
    """
    if not lam_max > 0 or not np.isfinite(lam_max):
        raise InvalidInputError(f"lam_max must be positive and finite, got {lam_max}")
    if not 0 < ratio < 1:
        raise InvalidInputError("ratio must lie in (0, 1)")
    if t < 0:
        raise InvalidInputError("t must be >= 0")
    return np.append(lam_max * ratio ** np.arange(t + 1), np.inf)


@dataclass
class CvReport:
    grid: np.ndarray
    scores: np.ndarray
    selected_index: int
    selected_lambda: float
    lam_max: float
    per_split_scores: Optional[np.ndarray] = None
    one_se_lambda: Optional[float] = None

    def to_dict(self):
        out = {
            "grid": [float(g) for g in self.grid],
            "scores": [float(s) for s in self.scores],
            "selected_index": int(self.selected_index),
            "selected_lambda": float(self.selected_lambda),
            "lambda_max": float(self.lam_max),
        }
        if self.per_split_scores is not None:
            out["per_split_scores"] = self.per_split_scores.tolist()
        if self.one_se_lambda is not None:
            out["one_se_lambda"] = float(self.one_se_lambda)
        return out


def _best_index(scores):
    s = np.where(np.isnan(scores), -np.inf, scores)
    if not np.any(np.isfinite(s)):
        raise TuningError("no grid point produced a finite score")
    # grid is descending, so argmax's first hit is the larger (sparser) level
    return int(np.argmax(s))


def penalty_for(kind, lam, d):
    return PenaltySpec.group(lam) if kind == GROUP else PenaltySpec.lasso(lam, d)


def grid_lambda_max(pair, d, kind, method):
    return lambda_max(pair, kind, d, method)


def _fit_one(args):
    pair, d, kind, method, lam, cfg = args
    try:
        return fit(pair, d, penalty_for(kind, lam, d), method, cfg)
    except SparseGepError as exc:
        log.debug("fit failed at lam=%g: %s", lam, exc)
        return None


def _workers():
    try:
        return max(1, int(os.environ.get("SPARSE_GEP_THREADS", "1")))
    except ValueError:
        return 1


def fit_path(pair, d, kind, method, grid, cfg=None):
    """Fit at every finite grid level; failed fits (e.g. over-penalized) are ``None``.

    The ``inf`` sentinel always maps to ``None``. Levels are fitted
    independently; ``SPARSE_GEP_THREADS`` > 1 spreads them over processes.
    """
    finite = [g for g in grid if np.isfinite(g)]
    jobs = [(pair, d, kind, method, float(g), cfg) for g in finite]
    n = min(_workers(), len(jobs))
    if n > 1:
        with ProcessPoolExecutor(n) as ex:
            fits = list(ex.map(_fit_one, jobs))
    else:
        fits = [_fit_one(j) for j in jobs]
    return fits + [None] * (len(grid) - len(finite))


def score_path(estimates, tune):
    scores = []
    for est in estimates:
        if est is None:
            scores.append(np.nan)
        else:
            scores.append(cv_score(est.U, tune.A, tune.B))
    return np.asarray(scores)


def select_lambda(train, tune, d, kind=GROUP, method=POI, cfg=None,
                  ratio=0.75, t=31, grid=None, return_path=False):
    """Fit on ``train`` across the grid, score on ``tune``, pick the best level.

    Returns ``(report, estimate)`` where ``estimate`` is the fit at the
    selected level; with ``return_path=True`` the list of all fits is appended.
    """
    if train.p != tune.p:
        raise InvalidInputError("train and tune pairs differ in dimension")
    lam_max = grid_lambda_max(train, d, kind, method)
    if grid is None:
        grid = lambda_grid(lam_max, ratio, t)
    grid = np.asarray(grid, dtype=float)
    fits = fit_path(train, d, kind, method, grid, cfg)
    scores = score_path(fits, tune)
    scores[~np.isfinite(grid)] = -np.inf
    best = _best_index(scores)
    report = CvReport(grid, scores, best, float(grid[best]), lam_max)
    if return_path:
        return report, fits[best], fits
    return report, fits[best]


def one_se_select(per_split_scores, grid):
    """Largest level whose mean score is within one standard error of the best.

    ``per_split_scores`` is ``splits x grid``; NaN counts as ``-inf``.
    """
    S = np.asarray(per_split_scores, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if S.ndim != 2 or S.shape[0] < 2:
        raise InvalidInputError("the one-standard-error rule needs >= 2 splits")
    if S.shape[1] != grid.size:
        raise InvalidInputError("score matrix does not match the grid")
    S = np.where(np.isnan(S), -np.inf, S)
    with np.errstate(invalid="ignore"):
        means = S.mean(axis=0)
    ok = np.isfinite(means) & np.isfinite(grid)
    if not np.any(ok):
        raise TuningError("no grid point has finite scores on every split")
    best = int(np.argmax(np.where(ok, means, -np.inf)))
    se = S[:, best].std(ddof=1) / np.sqrt(S.shape[0])
    within = ok & (means >= means[best] - se)
    return float(np.max(grid[within]))


def select_lambda_splits(splits, d, kind=GROUP, method=POI, cfg=None,
                         ratio=0.75, t=31):
    """Cross-validation over several ``(train, tune)`` splits.

    The grid is built from the largest ``lam_max`` across training pairs so
    that all splits share it. The best level maximizes the mean score; the
    one-standard-error choice is reported alongside.
    """
    if len(splits) < 1:
        raise InvalidInputError("need at least one split")
    lam_max = max(grid_lambda_max(tr, d, kind, method) for tr, _ in splits)
    grid = lambda_grid(lam_max, ratio, t)
    rows = []
    for tr, tu in splits:
        rows.append(score_path(fit_path(tr, d, kind, method, grid, cfg), tu))
    S = np.vstack(rows)
    S[:, ~np.isfinite(grid)] = -np.inf
    with np.errstate(invalid="ignore"):
        means = np.where(np.isnan(S), -np.inf, S).mean(axis=0)
    best = _best_index(means)
    one_se = one_se_select(S, grid) if len(splits) >= 2 else None
    return CvReport(grid, means, best, float(grid[best]), lam_max, S, one_se)
