"""Pure-Python coordinate-descent kernels (fallback when the compiled
extension is unavailable).

Both kernels update their iterate and the cached product with ``B`` in place
and return ``(sweeps, max_change)`` where ``max_change`` is the largest
absolute entry change seen in the last sweep.
"""
import math

import numpy as np


def lasso_cd(B, m, lam, z, bz, max_sweeps, tol):
    p = z.shape[0]
    diag = np.diag(B).copy()
    max_change = 0.0
    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for i in range(p):
            bii = diag[i]
            old = z[i]
            a = m[i] - bz[i] + bii * old
            if a > lam:
                new = (a - lam) / bii
            elif a < -lam:
                new = (a + lam) / bii
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                z[i] = new
                bz += delta * B[i]
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change < tol:
            return sweep, max_change
    return max_sweeps, max_change


def group_cd(B, M, lam, Z, BZ, max_sweeps, tol):
    p = Z.shape[0]
    diag = np.diag(B).copy()
    max_change = 0.0
    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for g in range(p):
            bgg = diag[g]
            old = Z[g].copy()
            a = M[g] - BZ[g] + bgg * old
            nrm = math.sqrt(float(a @ a))
            if nrm <= lam:
                new = np.zeros_like(a)
            else:
                new = ((1.0 - lam / nrm) / bgg) * a
            delta = new - old
            step = float(np.max(np.abs(delta)))
            if step != 0.0:
                Z[g] = new
                BZ += np.outer(B[g], delta)
                if step > max_change:
                    max_change = step
        if max_change < tol:
            return sweep, max_change
    return max_sweeps, max_change
