"""Independent reference computations used to check the solvers.

Nothing here calls into the coordinate-descent kernels or the whitening
code paths under test.
"""
import numpy as np
from scipy import linalg as sla
from scipy import optimize


def random_spd(rng, p, floor=0.5):
    W = rng.standard_normal((p, p))
    return W @ W.T / p + floor * np.eye(p)


def prox_gradient(B, M, kind, lams, tol=1e-13, max_iter=200000):
    """Accelerated proximal gradient (FISTA with restart) on
    ``trace(Z'BZ/2 - Z'M) + penalty``, stopped when the objective stalls."""
    M = np.atleast_2d(M.T).T if M.ndim == 1 else M
    L = np.linalg.eigvalsh(B)[-1]
    lams = np.broadcast_to(np.asarray(lams, dtype=float), (M.shape[1],))

    def prox(V, t):
        if kind == "group":
            nrm = np.linalg.norm(V, axis=1, keepdims=True)
            scale = np.maximum(1 - t * lams[0] / np.maximum(nrm, 1e-300), 0)
            return V * scale
        return np.sign(V) * np.maximum(np.abs(V) - t * lams[None, :], 0)

    def obj(Z):
        pen = (lams[0] * np.linalg.norm(Z, axis=1).sum() if kind == "group"
               else np.sum(lams * np.abs(Z).sum(axis=0)))
        return 0.5 * np.sum(Z * (B @ Z)) - np.sum(Z * M) + pen

    Z = np.zeros_like(M)
    Y, t_k, f_old = Z.copy(), 1.0, obj(Z)
    stall = 0
    for _ in range(max_iter):
        Z_new = prox(Y - (B @ Y - M) / L, 1.0 / L)
        f_new = obj(Z_new)
        small = abs(f_old - f_new) <= tol * max(1.0, abs(f_new))
        stall = stall + 1 if small else 0
        if stall >= 50:
            break
        if f_new > f_old:
            Y, t_k = Z.copy(), 1.0
            continue
        t_next = 0.5 * (1 + np.sqrt(1 + 4 * t_k ** 2))
        Y = Z_new + ((t_k - 1) / t_next) * (Z_new - Z)
        Z, t_k = Z_new, t_next
        f_old = f_new
    return Z, f_old


def grid_lasso_2d(B, m, lam, step=1e-3, box=2.0):
    """Grid search over ``[-box, box]^2`` refined by a local polish."""
    g = np.arange(-box, box + step / 2, step)
    Z1, Z2 = np.meshgrid(g, g, indexing="ij")
    f = (0.5 * (B[0, 0] * Z1 ** 2 + 2 * B[0, 1] * Z1 * Z2 + B[1, 1] * Z2 ** 2)
         - m[0] * Z1 - m[1] * Z2 + lam * (np.abs(Z1) + np.abs(Z2)))
    i, j = np.unravel_index(np.argmin(f), f.shape)

    def obj(z):
        return 0.5 * z @ B @ z - m @ z + lam * np.abs(z).sum()

    res = optimize.minimize(obj, [g[i], g[j]], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
    return res.x


def dense_gep_oracle(A, B, d):
    """Top-d generalized eigenvectors from LAPACK's symmetric-definite driver."""
    w, U = sla.eigh(A, B)
    return U[:, ::-1][:, :d], w[::-1][:d]


def two_pass_covariance(X):
    n = X.shape[0]
    mean = np.zeros(X.shape[1])
    for row in X:
        mean += row
    mean /= n
    C = np.zeros((X.shape[1], X.shape[1]))
    for row in X:
        r = row - mean
        C += np.outer(r, r)
    return C / (n - 1)


def principal_sines(U1, U2):
    """Sines of principal angles from ``sqrt(1 - cos^2)`` (coarser but independent)."""
    Q1 = np.linalg.qr(U1)[0]
    Q2 = np.linalg.qr(U2)[0]
    c = np.clip(np.linalg.svd(Q1.T @ Q2, compute_uv=False), 0, 1)
    return np.sqrt(1 - c ** 2)
