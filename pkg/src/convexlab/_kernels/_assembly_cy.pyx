# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled element kernels: P1 stiffness blocks and simplex measures.

Mirrors the numpy fallback in _assembly_np.py; results agree to rounding.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

cdef double FACT[5]
FACT[0] = 1.0
FACT[1] = 1.0
FACT[2] = 2.0
FACT[3] = 6.0
FACT[4] = 24.0


cdef inline double det_sym(double* g, int k) noexcept:
    if k == 1:
        return g[0]
    if k == 2:
        return g[0] * g[3] - g[1] * g[2]
    return (g[0] * (g[4] * g[8] - g[5] * g[7])
            - g[1] * (g[3] * g[8] - g[5] * g[6])
            + g[2] * (g[3] * g[7] - g[4] * g[6]))


cdef inline void inv_sym(double* g, double* out, int k, double d) noexcept:
    if k == 1:
        out[0] = 1.0 / d
    elif k == 2:
        out[0] = g[3] / d
        out[1] = -g[1] / d
        out[2] = -g[2] / d
        out[3] = g[0] / d
    else:
        out[0] = (g[4] * g[8] - g[5] * g[7]) / d
        out[1] = (g[2] * g[7] - g[1] * g[8]) / d
        out[2] = (g[1] * g[5] - g[2] * g[4]) / d
        out[3] = (g[5] * g[6] - g[3] * g[8]) / d
        out[4] = (g[0] * g[8] - g[2] * g[6]) / d
        out[5] = (g[2] * g[3] - g[0] * g[5]) / d
        out[6] = (g[3] * g[7] - g[4] * g[6]) / d
        out[7] = (g[1] * g[6] - g[0] * g[7]) / d
        out[8] = (g[0] * g[4] - g[1] * g[3]) / d


def simplex_measures(double[:, ::1] vertices, long[:, ::1] simplices):
    cdef Py_ssize_t nc = simplices.shape[0]
    cdef int k = <int>simplices.shape[1] - 1
    cdef int m = <int>vertices.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(nc)
    cdef double[::1] ov = out
    cdef double e[3][4]
    cdef double g[9]
    cdef Py_ssize_t c
    cdef int i, j, a
    cdef long v0
    cdef double s, d
    if k == 0:
        out[:] = 1.0
        return out
    for c in range(nc):
        v0 = simplices[c, 0]
        for i in range(k):
            for a in range(m):
                e[i][a] = vertices[simplices[c, i + 1], a] - vertices[v0, a]
        for i in range(k):
            for j in range(k):
                s = 0.0
                for a in range(m):
                    s += e[i][a] * e[j][a]
                g[i * k + j] = s
        d = det_sym(g, k)
        ov[c] = (d if d > 0.0 else 0.0) ** 0.5 / FACT[k]
    return out


def stiffness_entries(double[:, ::1] vertices, long[:, ::1] cells):
    cdef Py_ssize_t nc = cells.shape[0]
    cdef int k = <int>cells.shape[1] - 1
    cdef int m = <int>vertices.shape[1]
    cdef cnp.ndarray[double, ndim=3] local = np.empty((nc, k + 1, k + 1))
    cdef cnp.ndarray[double, ndim=1] vols = np.empty(nc)
    cdef double[:, :, ::1] lv = local
    cdef double[::1] vv = vols
    cdef double e[3][4]
    cdef double gr[4][4]
    cdef double g[9]
    cdef double gi[9]
    cdef Py_ssize_t c
    cdef int i, j, a
    cdef long v0
    cdef double s, d, vol
    for c in range(nc):
        v0 = cells[c, 0]
        for i in range(k):
            for a in range(m):
                e[i][a] = vertices[cells[c, i + 1], a] - vertices[v0, a]
        for i in range(k):
            for j in range(k):
                s = 0.0
                for a in range(m):
                    s += e[i][a] * e[j][a]
                g[i * k + j] = s
        d = det_sym(g, k)
        vol = (d if d > 0.0 else 0.0) ** 0.5 / FACT[k]
        vv[c] = vol
        inv_sym(g, gi, k, d)
        # gradients of barycentric coordinates 1..k, then 0 = -sum
        for i in range(k):
            for a in range(m):
                s = 0.0
                for j in range(k):
                    s += gi[i * k + j] * e[j][a]
                gr[i + 1][a] = s
        for a in range(m):
            s = 0.0
            for i in range(k):
                s += gr[i + 1][a]
            gr[0][a] = -s
        for i in range(k + 1):
            for j in range(i, k + 1):
                s = 0.0
                for a in range(m):
                    s += gr[i][a] * gr[j][a]
                lv[c, i, j] = vol * s
                lv[c, j, i] = vol * s
    return local, vols


def mass_entries(double[:, ::1] vertices, long[:, ::1] simplices):
    cdef cnp.ndarray[double, ndim=1] vols = simplex_measures(vertices, simplices)
    k = simplices.shape[1]
    base = (np.ones((k, k)) + np.eye(k)) / (k * (k + 1))
    local = vols[:, None, None] * base[None, :, :]
    return local, vols
