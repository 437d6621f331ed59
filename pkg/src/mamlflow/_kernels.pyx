# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for pools of quadratic tasks f_i(w) = 1/2 w'H_i w + b_i'w + c_i.

Every function mirrors one in ``_kernels_py`` and takes the stacked
arrays H (M,d,d), b (M,d), c (M,), p (M,). Task terms are accumulated in
index order so results are reproducible run to run.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _matvec(const double[:, ::1] A, const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j, d = A.shape[0]
    cdef double s
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += A[i, j] * x[j]
        out[i] = s


cdef inline double _dot(const double[::1] x, const double[::1] y) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * y[i]
    return s


def expected_grad(const double[:, :, ::1] H, const double[:, ::1] b, const double[::1] p, const double[::1] w):
    cdef Py_ssize_t M = H.shape[0], d = H.shape[1], i, k
    out_arr = np.zeros(d)
    cdef double[::1] out = out_arr
    cdef double[::1] g = np.empty(d)
    with nogil:
        for i in range(M):
            _matvec(H[i], w, g)
            for k in range(d):
                out[k] += p[i] * (g[k] + b[i, k])
    return out_arr


cdef void _maml_terms(const double[:, ::1] Hi, const double[::1] bi, double alpha, const double[::1] w,
                      double[::1] g, double[::1] u, double[::1] g2, double[::1] hg2) noexcept nogil:
    # g = grad f_i(w); u = inner point; g2 = grad f_i(u); hg2 = H_i g2
    cdef Py_ssize_t k, d = w.shape[0]
    _matvec(Hi, w, g)
    for k in range(d):
        g[k] += bi[k]
        u[k] = w[k] - alpha * g[k]
    _matvec(Hi, u, g2)
    for k in range(d):
        g2[k] += bi[k]
    _matvec(Hi, g2, hg2)


def maml_grad(const double[:, :, ::1] H, const double[:, ::1] b, const double[::1] p, double alpha,
              const double[::1] w):
    cdef Py_ssize_t M = H.shape[0], d = H.shape[1], i, k
    out_arr = np.zeros(d)
    cdef double[::1] out = out_arr
    cdef double[::1] g = np.empty(d), u = np.empty(d), g2 = np.empty(d), hg2 = np.empty(d)
    with nogil:
        for i in range(M):
            _maml_terms(H[i], b[i], alpha, w, g, u, g2, hg2)
            for k in range(d):
                out[k] += p[i] * (g2[k] - alpha * hg2[k])
    return out_arr


def fo_maml_grad(const double[:, :, ::1] H, const double[:, ::1] b, const double[::1] p, double alpha,
                 const double[::1] w):
    cdef Py_ssize_t M = H.shape[0], d = H.shape[1], i, k
    out_arr = np.zeros(d)
    cdef double[::1] out = out_arr
    cdef double[::1] g = np.empty(d), u = np.empty(d), g2 = np.empty(d), hg2 = np.empty(d)
    with nogil:
        for i in range(M):
            _matvec(H[i], w, g)
            for k in range(d):
                u[k] = w[k] - alpha * (g[k] + b[i, k])
            _matvec(H[i], u, g2)
            for k in range(d):
                out[k] += p[i] * (g2[k] + b[i, k])
    return out_arr


def maml_loss(const double[:, :, ::1] H, const double[:, ::1] b, const double[::1] c, const double[::1] p,
              double alpha, const double[::1] w):
    cdef Py_ssize_t M = H.shape[0], d = H.shape[1], i, k
    cdef double total = 0.0
    cdef double[::1] g = np.empty(d), u = np.empty(d), hu = np.empty(d)
    with nogil:
        for i in range(M):
            _matvec(H[i], w, g)
            for k in range(d):
                u[k] = w[k] - alpha * (g[k] + b[i, k])
            _matvec(H[i], u, hu)
            total += p[i] * (0.5 * _dot(u, hu) + _dot(b[i], u) + c[i])
    return total


def monitor(const double[:, :, ::1] H, const double[:, ::1] b, const double[::1] c, const double[::1] p,
            double alpha, const double[::1] w):
    """(F(w), grad F(w), grad f(w)) in a single pass over the tasks."""
    cdef Py_ssize_t M = H.shape[0], d = H.shape[1], i, k
    cdef double total = 0.0
    gF_arr = np.zeros(d)
    gf_arr = np.zeros(d)
    cdef double[::1] gF = gF_arr, gf = gf_arr
    cdef double[::1] g = np.empty(d), u = np.empty(d), g2 = np.empty(d), hg2 = np.empty(d)
    with nogil:
        for i in range(M):
            _maml_terms(H[i], b[i], alpha, w, g, u, g2, hg2)
            # g2 - b = H u, so f_i(u) = 1/2 u'(g2 - b) + b'u + c = 1/2 u'(g2 + b) + c
            total += p[i] * (0.5 * (_dot(u, g2) + _dot(u, b[i])) + c[i])
            for k in range(d):
                gF[k] += p[i] * (g2[k] - alpha * hg2[k])
                gf[k] += p[i] * g[k]
    return total, gF_arr, gf_arr
