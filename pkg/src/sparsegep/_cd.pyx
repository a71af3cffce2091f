# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled coordinate-descent kernels; same contract as ``_cd_py``."""
from libc.math cimport sqrt, fabs

import numpy as np


def lasso_cd(const double[:, ::1] B, const double[::1] m, double lam,
             double[::1] z, double[::1] bz, int max_sweeps, double tol):
    cdef Py_ssize_t p = z.shape[0]
    cdef Py_ssize_t i, k
    cdef int sweep
    cdef double bii, old, a, new, delta, max_change = 0.0
    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for i in range(p):
            bii = B[i, i]
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
                for k in range(p):
                    bz[k] += delta * B[i, k]
                if fabs(delta) > max_change:
                    max_change = fabs(delta)
        if max_change < tol:
            return sweep, max_change
    return max_sweeps, max_change


def group_cd(const double[:, ::1] B, const double[:, ::1] M, double lam,
             double[:, ::1] Z, double[:, ::1] BZ, int max_sweeps, double tol):
    cdef Py_ssize_t p = Z.shape[0]
    cdef Py_ssize_t d = Z.shape[1]
    cdef Py_ssize_t g, j, k
    cdef int sweep
    cdef double bgg, nrm, scale, delta, step, bkg, max_change = 0.0
    cdef double[::1] a = np.empty(d)
    cdef double[::1] dl = np.empty(d)
    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for g in range(p):
            bgg = B[g, g]
            nrm = 0.0
            for j in range(d):
                a[j] = M[g, j] - BZ[g, j] + bgg * Z[g, j]
                nrm += a[j] * a[j]
            nrm = sqrt(nrm)
            if nrm <= lam:
                scale = 0.0
            else:
                scale = (1.0 - lam / nrm) / bgg
            step = 0.0
            for j in range(d):
                delta = scale * a[j] - Z[g, j]
                dl[j] = delta
                if fabs(delta) > step:
                    step = fabs(delta)
            if step != 0.0:
                for j in range(d):
                    Z[g, j] = scale * a[j]
                for k in range(p):
                    bkg = B[g, k]
                    if bkg != 0.0:
                        for j in range(d):
                            BZ[k, j] += bkg * dl[j]
                if step > max_change:
                    max_change = step
        if max_change < tol:
            return sweep, max_change
    return max_sweeps, max_change
