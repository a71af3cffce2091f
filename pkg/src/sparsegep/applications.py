"""Build (A, B) pairs from data for PCA, multiclass LDA, SIR and CCA.

Divisor conventions: sample covariance uses ``n - 1``, the within-class
scatter ``n - K`` and the between-class scatter ``n`` (class weights
``n_k / n``).
"""
from dataclasses import dataclass

import numpy as np

from .core import GepPair
from .errors import InvalidInputError


@dataclass
class LabeledData:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise InvalidInputError("X must be n x p and y of length n")
        if self.X.shape[0] < 2:
            raise InvalidInputError("need n >= 2")

    @property
    def n(self):
        return self.X.shape[0]


def _as_data(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError("X must be a 2-d array")
    if X.shape[0] < 2:
        raise InvalidInputError("need at least two observations")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("X has non-finite entries")
    return X


def covariance(X):
    X = _as_data(X)
    Xc = X - X.mean(axis=0)
    return Xc.T @ Xc / (X.shape[0] - 1)


def pca_pair(X, gram=False):
    """``A`` = sample covariance (or ``Xc' Xc`` with ``gram=True``), ``B = I``."""
    X = _as_data(X)
    Xc = X - X.mean(axis=0)
    A = Xc.T @ Xc
    if not gram:
        A = A / (X.shape[0] - 1)
    return GepPair.build(A)


def scatter_matrices(data):
    """Between-class ``S_B`` (divisor n) and within-class ``S_W`` (divisor n - K)."""
    X, y = data.X, data.y
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise InvalidInputError("need at least two classes")
    if np.any(counts < 2):
        bad = classes[counts < 2].tolist()
        raise InvalidInputError(f"classes {bad} have fewer than two members")
    n, p = X.shape
    xbar = X.mean(axis=0)
    S_B = np.zeros((p, p))
    S_W = np.zeros((p, p))
    for c, nk in zip(classes, counts):
        Xk = X[y == c]
        mk = Xk.mean(axis=0)
        diff = mk - xbar
        S_B += nk * np.outer(diff, diff)
        R = Xk - mk
        S_W += R.T @ R
    return S_B / n, S_W / (n - classes.size)


def lda_pair(data):
    """``A = S_B``, ``B = S_W`` (regularized when singular)."""
    S_B, S_W = scatter_matrices(data)
    return GepPair.build(S_B, S_W)


def slice_labels(y, n_slices=2, discrete=None):
    """Slice index per observation.

    Discrete responses (integer or boolean dtype unless ``discrete`` says
    otherwise) are sliced by class and must show ``n_slices`` distinct values.
    Continuous responses are cut into ``n_slices`` equal-count bins by rank;
    with fewer observations than slices the count is reduced.
    """
    y = np.asarray(y)
    if n_slices < 2:
        raise InvalidInputError("need n_slices >= 2")
    if discrete is None:
        discrete = y.dtype.kind in "biu"
    if discrete:
        classes, idx = np.unique(y, return_inverse=True)
        if classes.size < n_slices:
            raise InvalidInputError(
                f"{n_slices - classes.size} of {n_slices} slices are empty")
        return idx
    order = np.argsort(y, kind="stable")
    h = min(n_slices, y.size)
    idx = np.empty(y.size, dtype=int)
    for s, chunk in enumerate(np.array_split(order, h)):
        idx[chunk] = s
    return idx


def sir_matrices(data, n_slices=2, discrete=None):
    X = data.X
    idx = slice_labels(data.y, n_slices, discrete)
    n, p = X.shape
    xbar = X.mean(axis=0)
    A = np.zeros((p, p))
    for s in np.unique(idx):
        Xs = X[idx == s]
        diff = Xs.mean(axis=0) - xbar
        A += (Xs.shape[0] / n) * np.outer(diff, diff)
    return A, covariance(X)


def sir_pair(data, n_slices=2, discrete=None):
    """Sliced inverse regression: ``A`` = covariance of slice means, ``B = Cov(x)``."""
    A, B = sir_matrices(data, n_slices, discrete)
    return GepPair.build(A, B)


def _standardize(X, name):
    X = _as_data(X)
    sd = X.std(axis=0, ddof=1)
    bad = np.flatnonzero(sd <= 1e-12 * max(1.0, np.abs(X).max()))
    if bad.size:
        raise InvalidInputError(f"{name} column {int(bad[0])} has zero variance")
    return (X - X.mean(axis=0)) / sd


def cca_pairs(X, Y, standardized_identity=True):
    """Two GEPs whose leading eigenvectors are the canonical coefficients.

    With ``standardized_identity`` both blocks are standardized and the
    within-block covariances replaced by identities, giving
    ``(S12 S12', I_p)`` and ``(S12' S12, I_q)``. Otherwise
    ``(S12 S2^-1 S21, S1)`` and ``(S21 S1^-1 S12, S2)`` with ``S1``, ``S2``
    regularized when singular.

    Returns
    -------
    (g_pair, h_pair)
    """
    X = _as_data(X)
    Y = _as_data(Y)
    if X.shape[0] != Y.shape[0]:
        raise InvalidInputError("X and Y must have the same number of rows")
    n = X.shape[0]
    if standardized_identity:
        Xs = _standardize(X, "X")
        Ys = _standardize(Y, "Y")
        S12 = Xs.T @ Ys / (n - 1)
        return GepPair.build(S12 @ S12.T), GepPair.build(S12.T @ S12)
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    S12 = Xc.T @ Yc / (n - 1)
    g_tmp = GepPair.build(np.zeros((X.shape[1],) * 2), Xc.T @ Xc / (n - 1))
    h_tmp = GepPair.build(np.zeros((Y.shape[1],) * 2), Yc.T @ Yc / (n - 1))
    S1, S2 = g_tmp.B, h_tmp.B
    A_g = S12 @ np.linalg.solve(S2, S12.T)
    A_h = S12.T @ np.linalg.solve(S1, S12)
    g = GepPair.build(A_g, S1, regularize=False)
    h = GepPair.build(A_h, S2, regularize=False)
    g.regularized, g.epsilon_used = g_tmp.regularized, g_tmp.epsilon_used
    h.regularized, h.epsilon_used = h_tmp.regularized, h_tmp.epsilon_used
    return g, h
