# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Mirrors :mod:`mmrl._fallback` function for function."""

from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free
from libc.math cimport sin, cos, log, exp, M_PI

import numpy as np

cdef uint64_t GAMMA = 0x9e3779b97f4a7c15ULL
cdef double INV53 = 1.1102230246251565e-16


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL
    return z ^ (z >> 31)


cdef inline double to_unit(uint64_t z) noexcept nogil:
    return (<double>(z >> 11) + 0.5) * INV53


cdef void _uniforms(uint64_t key, Py_ssize_t start, Py_ssize_t n,
                    double* u1, double* u2) noexcept nogil:
    cdef Py_ssize_t i
    cdef uint64_t c
    for i in range(n):
        c = key + <uint64_t>(2 * (start + i) + 1) * GAMMA
        u1[i] = to_unit(mix64(c))
        u2[i] = to_unit(mix64(c + GAMMA))


cdef void _sheet(uint64_t key, Py_ssize_t n, const double* alpha, const double* inv_alpha,
                 const double* expo, const double* scale,
                 double* u, double* w, double* out) noexcept nogil:
    cdef Py_ssize_t l
    _uniforms(key, 0, n, u, w)
    for l in range(n):
        u[l] = M_PI * (u[l] - 0.5)
    for l in range(n):
        out[l] = scale[l] * sin(alpha[l] * u[l]) * exp(
            expo[l] * (log(cos((1.0 - alpha[l]) * u[l])) - log(-log(w[l])))
            - inv_alpha[l] * log(cos(u[l])))


def uniform_pairs(uint64_t key, Py_ssize_t start, Py_ssize_t n):
    """Two arrays of counter-based uniforms on (0, 1) for entries start..start+n-1."""
    u1 = np.empty(n)
    u2 = np.empty(n)
    cdef double[::1] a = u1
    cdef double[::1] b = u2
    if n > 0:
        with nogil:
            _uniforms(key, start, n, &a[0], &b[0])
    return u1, u2


def sas_sheets(const uint64_t[::1] keys, const double[::1] alpha, const double[::1] scale,
               double[:, ::1] out):
    """Fill ``out[r]`` with the symmetric stable sheet of stream ``keys[r]``."""
    cdef Py_ssize_t n = alpha.shape[0], R = keys.shape[0], r
    ia = 1.0 / np.asarray(alpha)
    ex = (1.0 - np.asarray(alpha)) * ia
    cdef double[::1] inv_alpha = ia
    cdef double[::1] expo = ex
    cdef double* u
    cdef double* w
    if n == 0 or R == 0:
        return
    with nogil:
        u = <double*> malloc(n * sizeof(double))
        w = <double*> malloc(n * sizeof(double))
        for r in range(R):
            _sheet(keys[r], n, &alpha[0], &inv_alpha[0], &expo[0], &scale[0], u, w, &out[r, 0])
        free(u)
        free(w)


def sas_project(const uint64_t[::1] keys, const double[::1] alpha, const double[::1] scale,
                const double[:, ::1] weights, double[:, ::1] out):
    """``out[r, i] = sum_l weights[i, l] * sheet_r[l]`` without storing the sheets."""
    cdef Py_ssize_t n = alpha.shape[0], R = keys.shape[0], m = weights.shape[0], r, i, l
    ia = 1.0 / np.asarray(alpha)
    ex = (1.0 - np.asarray(alpha)) * ia
    cdef double[::1] inv_alpha = ia
    cdef double[::1] expo = ex
    cdef double* u
    cdef double* w
    cdef double* sheet
    cdef double acc
    if n == 0 or R == 0:
        return
    with nogil:
        u = <double*> malloc(n * sizeof(double))
        w = <double*> malloc(n * sizeof(double))
        sheet = <double*> malloc(n * sizeof(double))
        for r in range(R):
            _sheet(keys[r], n, &alpha[0], &inv_alpha[0], &expo[0], &scale[0], u, w, sheet)
            for i in range(m):
                acc = 0.0
                for l in range(n):
                    acc = acc + weights[i, l] * sheet[l]
                out[r, i] = acc
        free(u)
        free(w)
        free(sheet)


def kernel_cells(double u, double v, const double[:, ::1] nodes, const double[:, ::1] inv_alpha,
                 const double[::1] gl_weights, double width, Py_ssize_t count, double[::1] out):
    """Gauss-Legendre integrals of ``(u - s)**(v - 1/alpha(s))`` over cells ``0..count-1``."""
    cdef Py_ssize_t q = gl_weights.shape[0], l, i
    cdef double acc
    with nogil:
        for l in range(count):
            acc = 0.0
            for i in range(q):
                acc = acc + gl_weights[i] * exp((v - inv_alpha[l, i]) * log(u - nodes[l, i]))
            out[l] = acc * width
