"""Synthetic models, evaluation metrics and a seeded experiment runner.

Families:

* ``pca``: spiked covariance ``U L U' + I`` with sparse ``U`` (models I-III).
* ``lda``: three- or four-class Gaussian mixtures in p = 200 (models I-V).
* ``taichi``: binary labels from the Tai-Chi symbol on the first two
  coordinates, standard normal noise elsewhere.
"""
import csv
import dataclasses
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .applications import LabeledData, lda_pair, pca_pair, sir_pair
from .core import FASTPOI, POI, OuterConfig, fit, lambda_max
from .errors import InvalidInputError, SparseGepError
from .linalg import dense_gep, orthonormalize, projection_distance, qr_thin
from .penalties import GROUP, LASSO, InnerSolveConfig
from .tuning import penalty_for, select_lambda

log = logging.getLogger(__name__)

PCA_MODELS = ("I", "II", "III")
LDA_MODELS = ("I", "II", "III", "IV", "V")

# ---------------------------------------------------------------- PCA models


def pca_loadings(model, d, p, rng):
    """Sparse ``p x d`` loading matrix of a PCA model (not orthonormalized)."""
    if model not in PCA_MODELS:
        raise InvalidInputError(f"unknown PCA model {model!r}")
    U = np.zeros((p, d))
    if model == "I":
        s = 10
        if p <= s:
            raise InvalidInputError(f"model I needs p > {s}")
        z = rng.standard_normal((s, d))
        U[:s] = z / np.linalg.norm(z, axis=0)
        return U
    s = 5
    if p <= d * s:
        raise InvalidInputError(f"model {model} needs p > {d * s}")
    if model == "II":
        U[:d * s] = np.kron(np.eye(d), np.ones((s, 1))) / np.sqrt(s)
    else:
        lower = np.tril(np.ones((d, d)))
        U[:d * s] = qr_thin(np.kron(lower, np.ones((s, 1))))[0]
    return U


def pca_spikes(d, scale="linear"):
    """Spike sizes ``3 * (5, 4, ..., 5 - d + 1)``, squared with ``scale="squared"``."""
    root = 3.0 * (5.0 - np.arange(d))
    if scale == "linear":
        return root
    if scale == "squared":
        return root ** 2
    raise InvalidInputError(f"unknown spike scale {scale!r}")


def pca_covariance(U, scale="linear"):
    """``U diag(spikes) U' + I``."""
    return (U * pca_spikes(U.shape[1], scale)) @ U.T + np.eye(U.shape[0])


def sample_gaussian(n, mean, chol, rng):
    return rng.standard_normal((n, chol.shape[0])) @ chol.T + mean


def gen_pca(model, d, p, n, rng, scale="linear"):
    """Draw ``n`` rows from a PCA model.

    Returns ``(X, U_true)`` with ``U_true`` an orthonormal basis of the
    loading span.
    """
    U = pca_loadings(model, d, p, rng)
    L = np.linalg.cholesky(pca_covariance(U, scale))
    return sample_gaussian(n, 0.0, L, rng), orthonormalize(U)


# ---------------------------------------------------------------- LDA models

_V = np.array([[2, 1, 2, 1, 2], [1, -1, 1, -1, 1], [0, 1, -1, 1, 0]], dtype=float).T
_W = np.array([[-1, 1, 1, 1, 1], [1, -1, 1, -1, 1], [1, 1, -1, 1, 0]], dtype=float).T


def compound_symmetry(p, rho):
    return (1 - rho) * np.eye(p) + rho * np.ones((p, p))


def ar1(p, rho):
    i = np.arange(p)
    return rho ** np.abs(i[:, None] - i[None, :])


def lda_population(model, p=200):
    """Class means (``p x K``) and common covariance of an LDA model."""
    if model not in LDA_MODELS:
        raise InvalidInputError(f"unknown LDA model {model!r}")
    V = np.zeros((p, 3))
    V[:5] = _V
    W = np.zeros((p, 3))
    W[:5] = _W
    if model == "I":
        return V, np.eye(p)
    if model == "II":
        S = compound_symmetry(p, 0.5)
        return S @ V, S
    if model == "III":
        S = ar1(p, 0.5)
        return S @ V, S
    S = compound_symmetry(p, 0.5)
    if model == "IV":
        return S @ W, S
    Wt = 2.0 * np.column_stack([W, W.mean(axis=1)])
    return S @ Wt, S


def lda_truth(means, sigma, dim=2):
    """Orthonormal basis of the top-``dim`` population discriminant subspace."""
    centered = means - means.mean(axis=1, keepdims=True)
    A = centered @ centered.T / means.shape[1]
    U, _ = dense_gep(A, sigma, dim)
    return orthonormalize(U)


def gen_lda(model, n_per_class, rng, p=200, means=None, sigma=None):
    """Sample ``n_per_class`` points per class.

    Returns ``(LabeledData, U_true)``; labels run from 1 to K and the true
    discriminant subspace is 2-dimensional for every model.
    """
    if means is None:
        means, sigma = lda_population(model, p)
    L = np.linalg.cholesky(sigma)
    K = means.shape[1]
    X = np.vstack([sample_gaussian(n_per_class, means[:, k], L, rng) for k in range(K)])
    y = np.repeat(np.arange(1, K + 1), n_per_class)
    return LabeledData(X, y), lda_truth(means, sigma)


# ---------------------------------------------------------------- Tai-Chi


def taichi_label(x1, x2):
    """1 on the 'yin' part of a radius-2 Tai-Chi symbol, else 0.

    Yin is the right half-disk with the lower lobe (radius 1, centre (0,-1))
    removed and the upper lobe (radius 1, centre (0,1)) added; the two eyes
    (radius 1/4 at the lobe centres) take the opposite colour.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    r_up = x1 ** 2 + (x2 - 1) ** 2
    r_dn = x1 ** 2 + (x2 + 1) ** 2
    yin = ((x1 > 0) & (r_dn > 1)) | (r_up <= 1)
    eye = (r_up <= 1 / 16) | (r_dn <= 1 / 16)
    return (yin ^ eye).astype(int)


def gen_taichi(n, p, rng):
    if p < 2:
        raise InvalidInputError("need p >= 2")
    r = 2.0 * np.sqrt(rng.uniform(size=n))
    theta = rng.uniform(0.0, 2 * np.pi, size=n)
    X = rng.standard_normal((n, p))
    X[:, 0] = r * np.cos(theta)
    X[:, 1] = r * np.sin(theta)
    return LabeledData(X, taichi_label(X[:, 0], X[:, 1]))


# ---------------------------------------------------------------- classifier


@dataclass
class LdaFit:
    classes: np.ndarray
    means: np.ndarray
    precision: np.ndarray
    log_priors: np.ndarray
    ridged: bool

    def scores(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        PM = self.precision @ self.means
        return X @ PM - 0.5 * np.sum(self.means * PM, axis=0) + self.log_priors

    def predict(self, X):
        return self.classes[np.argmax(self.scores(X), axis=1)]


def fit_lda(data):
    """Linear discriminant with pooled covariance and class-frequency priors."""
    X = data.X
    classes, counts = np.unique(data.y, return_counts=True)
    n, d = X.shape
    means = np.column_stack([X[data.y == c].mean(axis=0) for c in classes])
    R = X - means[:, np.searchsorted(classes, data.y)].T
    S = R.T @ R / max(n - classes.size, 1)
    ridged = False
    if np.linalg.cond(S) >= 1e12:
        S = S + 1e-8 * max(np.trace(S), 1e-300) / d * np.eye(d)
        ridged = True
    return LdaFit(classes, means, np.linalg.inv(S), np.log(counts / n), ridged)


def classify_lda(train, test):
    """Fit on reduced training data, predict the test set.

    Returns ``(predicted, rate, ridged)`` with ``rate`` the misclassified
    fraction of ``test``.
    """
    model = fit_lda(train)
    pred = model.predict(test.X)
    return pred, float(np.mean(pred != test.y)), model.ridged


# ---------------------------------------------------------------- experiments


@dataclass
class ExperimentSpec:
    family: str = "pca"
    model: str = "I"
    d: Optional[int] = None
    p: Optional[int] = None
    n_train: Optional[int] = None
    n_tune: Optional[int] = None
    n_test: Optional[int] = None
    repetitions: int = 1
    seed: int = 0
    method: Optional[str] = None
    penalty: str = GROUP
    grid_ratio: float = 0.75
    grid_len: int = 31
    lambda_rel: float = 0.5
    n_slices: int = 2
    spike_scale: str = "linear"
    max_outer: int = 100
    outer_tol: float = 1e-5
    inner_tol: float = 1e-7

    def resolved(self):
        """Copy with family defaults filled in and values validated.

        For ``lda`` the sample sizes count observations per class and the
        default test size is 100 per training observation of a class.
        """
        s = dataclasses.replace(self)
        s.model = str(s.model).upper()
        if s.family == "pca":
            if s.model not in PCA_MODELS:
                raise InvalidInputError(f"unknown PCA model {s.model!r}")
            s.d = s.d or 3
            s.p = s.p or 200
            s.n_train = s.n_train or 100
            s.n_tune = s.n_tune or s.n_train
            s.n_test = s.n_test or 0
            s.method = s.method or POI
        elif s.family == "lda":
            if s.model not in LDA_MODELS:
                raise InvalidInputError(f"unknown LDA model {s.model!r}")
            K = 4 if s.model == "V" else 3
            s.d = s.d or K - 1
            s.p = s.p or 200
            s.n_train = s.n_train or 30
            s.n_tune = s.n_tune or s.n_train
            s.n_test = s.n_test or 100 * s.n_train
            s.method = s.method or FASTPOI
        elif s.family == "taichi":
            s.d = s.d or 2
            s.p = s.p or 100
            s.n_train = s.n_train or 1000
            s.n_tune = s.n_tune or 0
            s.n_test = s.n_test or 0
            s.method = s.method or POI
        else:
            raise InvalidInputError(f"unknown family {s.family!r}")
        if s.repetitions < 1:
            raise InvalidInputError("repetitions must be >= 1")
        if s.method not in (POI, FASTPOI):
            raise InvalidInputError(f"unknown method {s.method!r}")
        if s.penalty not in (LASSO, GROUP):
            raise InvalidInputError(f"unknown penalty {s.penalty!r}")
        if not 1 <= s.d < s.p:
            raise InvalidInputError("need 1 <= d < p")
        return s

    def outer_config(self):
        return OuterConfig(max_outer=self.max_outer, outer_tol=self.outer_tol,
                           inner=InnerSolveConfig(tol=self.inner_tol))

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(names)
        if unknown:
            raise InvalidInputError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**data)

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items() if v is not None)

    @classmethod
    def from_text(cls, text):
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        types = {"d": int, "p": int, "n_train": int, "n_tune": int, "n_test": int,
                 "repetitions": int, "seed": int, "grid_len": int, "n_slices": int,
                 "max_outer": int, "grid_ratio": float, "lambda_rel": float,
                 "outer_tol": float, "inner_tol": float}
        data = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                data[key] = types.get(key, str)(value)
            except ValueError as exc:
                raise InvalidInputError(f"line {lineno}: bad value for {key}") from exc
        return cls.from_dict(data)


REP_FIELDS = ("rep", "status", "min_distance", "cv_distance", "selected_lambda",
              "support_size", "true_positives", "false_positives",
              "misclassification", "outer_iters", "converged")
NUMERIC_FIELDS = REP_FIELDS[2:10]


@dataclass
class ExperimentReport:
    spec: dict
    reps: list
    aggregates: dict = field(default_factory=dict)
    failures: int = 0

    def to_json(self):
        payload = {"spec": self.spec, "repetitions": self.reps,
                   "aggregates": self.aggregates, "failures": self.failures}
        return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REP_FIELDS)
        for r in self.reps:
            w.writerow([_fmt(r.get(k)) for k in REP_FIELDS])
        agg = {k: self.aggregates.get(k, {}).get("mean") for k in NUMERIC_FIELDS}
        agg.update(rep="mean", status=f"failures={self.failures}")
        w.writerow([_fmt(agg.get(k)) for k in REP_FIELDS])
        return buf.getvalue()

    def aggregate_row(self):
        return {k: v["mean"] for k, v in self.aggregates.items()}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _selection_counts(support, truth_rows):
    sel = set(support)
    return len(sel), len(sel & truth_rows), len(sel - truth_rows)


def _summarize(est, U_true, fits, report):
    truth_rows = set(np.flatnonzero(np.linalg.norm(U_true, axis=1) > 1e-12).tolist())
    dists = [projection_distance(f.Q, U_true) for f in fits if f is not None]
    size, tp, fp = _selection_counts(est.support, truth_rows)
    return {
        "min_distance": float(min(dists)),
        "cv_distance": float(projection_distance(est.Q, U_true)),
        "selected_lambda": float(report.selected_lambda),
        "support_size": size,
        "true_positives": tp,
        "false_positives": fp,
        "outer_iters": int(est.outer_iters),
        "converged": bool(est.converged),
    }


def _rep_pca(s, rng):
    U = pca_loadings(s.model, s.d, s.p, rng)
    L = np.linalg.cholesky(pca_covariance(U, s.spike_scale))
    U_true = orthonormalize(U)
    train = pca_pair(sample_gaussian(s.n_train, 0.0, L, rng))
    tune = pca_pair(sample_gaussian(s.n_tune, 0.0, L, rng), gram=True)
    report, est, fits = select_lambda(train, tune, s.d, s.penalty, s.method,
                                      s.outer_config(), s.grid_ratio, s.grid_len,
                                      return_path=True)
    return _summarize(est, U_true, fits, report)


def _rep_lda(s, rng):
    means, sigma = lda_population(s.model, s.p)
    tr, U_true = gen_lda(s.model, s.n_train, rng, means=means, sigma=sigma)
    tu, _ = gen_lda(s.model, s.n_tune, rng, means=means, sigma=sigma)
    te, _ = gen_lda(s.model, s.n_test, rng, means=means, sigma=sigma)
    report, est, fits = select_lambda(lda_pair(tr), lda_pair(tu), s.d, s.penalty,
                                      s.method, s.outer_config(), s.grid_ratio,
                                      s.grid_len, return_path=True)
    out = _summarize(est, U_true, fits, report)
    _, rate, _ = classify_lda(LabeledData(tr.X @ est.U, tr.y),
                              LabeledData(te.X @ est.U, te.y))
    out["misclassification"] = rate
    return out


def taichi_fit(data, d=2, kind=GROUP, method=POI, lambda_rel=0.5, n_slices=2, cfg=None):
    """SIR pair plus a single fit at ``lambda_rel * lambda_max``."""
    pair = sir_pair(data, n_slices)
    lam = lambda_rel * lambda_max(pair, kind, d, method)
    return fit(pair, d, penalty_for(kind, lam, d), method, cfg), lam


def _rep_taichi(s, rng):
    data = gen_taichi(s.n_train, s.p, rng)
    U_true = np.eye(s.p)[:, :2]
    est, lam = taichi_fit(data, s.d, s.penalty, s.method, s.lambda_rel,
                          s.n_slices, s.outer_config())
    dist = projection_distance(est.Q, U_true)
    size, tp, fp = _selection_counts(est.support, {0, 1})
    return {"min_distance": dist, "cv_distance": dist, "selected_lambda": lam,
            "support_size": size, "true_positives": tp, "false_positives": fp,
            "outer_iters": int(est.outer_iters), "converged": bool(est.converged)}


_RUNNERS = {"pca": _rep_pca, "lda": _rep_lda, "taichi": _rep_taichi}


def repetition_rng(seed, rep):
    return np.random.default_rng([int(seed), int(rep)])


def run_repetition(spec, rep):
    """Run one repetition; failures are recorded rather than raised."""
    s = spec.resolved()
    row = {"rep": rep, "status": "ok"}
    try:
        row.update(_RUNNERS[s.family](s, repetition_rng(s.seed, rep)))
    except (SparseGepError, np.linalg.LinAlgError) as exc:
        log.warning("repetition %d failed: %s", rep, exc)
        row["status"] = f"failed: {exc}"
    return row


def _run_rep_worker(args):
    os.environ["SPARSE_GEP_THREADS"] = "1"
    return run_repetition(*args)


def aggregate(rows):
    ok = [r for r in rows if r["status"] == "ok"]
    out = {}
    for k in NUMERIC_FIELDS:
        vals = np.array([r[k] for r in ok if r.get(k) is not None], dtype=float)
        if vals.size == 0:
            continue
        se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        out[k] = {"mean": float(vals.mean()), "se": se, "count": int(vals.size)}
    return out


def run_experiment(spec, workers=None):
    """Run all repetitions of ``spec`` and aggregate them.

    Repetition ``i`` draws from ``default_rng([seed, i])`` so results do not
    depend on ``workers``.
    """
    s = spec.resolved()
    if workers is None:
        try:
            workers = int(os.environ.get("SPARSE_GEP_THREADS", "1"))
        except ValueError:
            workers = 1
    jobs = [(s, i) for i in range(s.repetitions)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as ex:
            rows = list(ex.map(_run_rep_worker, jobs))
    else:
        rows = [run_repetition(*j) for j in jobs]
    rows.sort(key=lambda r: r["rep"])
    failures = sum(r["status"] != "ok" for r in rows)
    return ExperimentReport(s.to_dict(), rows, aggregate(rows), failures)
