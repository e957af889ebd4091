# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: off-grid gather products and surface-measure transforms.

Semantics match ``_pykernels``; only real inputs are handled here.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, cos, sin, M_PI

cnp.import_array()

NAME = "cython"


cdef inline int _taps(double t, int order, double* w) noexcept nogil:
    if order == 3:
        w[0] = ((-0.5 * t + 1.0) * t - 0.5) * t
        w[1] = (1.5 * t - 2.5) * t * t + 1.0
        w[2] = ((-1.5 * t + 2.0) * t + 0.5) * t
        w[3] = (0.5 * t - 0.5) * t * t
        return -1
    w[0] = 1.0 - t
    w[1] = t
    return 0


cdef inline void _fill_axis(double s, int order, int ntaps, Py_ssize_t origin, Py_ssize_t wlen,
                            Py_ssize_t n, double* w, Py_ssize_t[:, ::1] idx) noexcept nogil:
    cdef double q = -s
    cdef double fq = floor(q)
    cdef int off = _taps(q - fq, order, w)
    cdef Py_ssize_t x, a, v
    cdef Py_ssize_t base = origin + <Py_ssize_t>fq + off
    for a in range(ntaps):
        for x in range(wlen):
            v = (base + x + a) % n
            if v < 0:
                v += n
            idx[a, x] = v


cdef inline void _kahan(double[::1] total, double[::1] comp, double[::1] prod, double w, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t c
    cdef double y, t
    for c in range(n):
        y = w * prod[c] - comp[c]
        t = total[c] + y
        comp[c] = (t - total[c]) - y
        total[c] = t


def _check(int order):
    if order not in (1, 3):
        raise ValueError(f"unsupported interpolation order {order}")
    return 4 if order == 3 else 2


def gather_product_1d(const double[:, ::1] F, const double[:, :, ::1] shifts, const double[::1] weights,
                      Py_ssize_t o0, Py_ssize_t w0, int order):
    cdef int ntaps = _check(order)
    cdef Py_ssize_t m = F.shape[0], n0 = F.shape[1], M = shifts.shape[0]
    cdef Py_ssize_t i, j, x, a
    cdef double wt0[4]
    cdef double v
    cdef Py_ssize_t[:, ::1] idx0 = np.empty((ntaps, w0), dtype=np.intp)
    cdef double[::1] total = np.zeros(w0)
    cdef double[::1] comp = np.zeros(w0)
    cdef double[::1] prod = np.empty(w0)
    with nogil:
        for i in range(M):
            for x in range(w0):
                prod[x] = 1.0
            for j in range(m):
                _fill_axis(shifts[i, j, 0], order, ntaps, o0, w0, n0, wt0, idx0)
                for x in range(w0):
                    v = 0.0
                    for a in range(ntaps):
                        v += wt0[a] * F[j, idx0[a, x]]
                    prod[x] *= v
            _kahan(total, comp, prod, weights[i], w0)
    return np.asarray(total)


def gather_product_2d(const double[:, :, ::1] F, const double[:, :, ::1] shifts, const double[::1] weights,
                      Py_ssize_t o0, Py_ssize_t o1, Py_ssize_t w0, Py_ssize_t w1, int order):
    cdef int ntaps = _check(order)
    cdef Py_ssize_t m = F.shape[0], n0 = F.shape[1], n1 = F.shape[2], M = shifts.shape[0]
    cdef Py_ssize_t i, j, x0, x1, a, b, r
    cdef double wt0[4]
    cdef double wt1[4]
    cdef double v, s
    cdef Py_ssize_t[:, ::1] idx0 = np.empty((ntaps, w0), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] idx1 = np.empty((ntaps, w1), dtype=np.intp)
    cdef double[::1] total = np.zeros(w0 * w1)
    cdef double[::1] comp = np.zeros(w0 * w1)
    cdef double[::1] prod = np.empty(w0 * w1)
    with nogil:
        for i in range(M):
            for x0 in range(w0 * w1):
                prod[x0] = 1.0
            for j in range(m):
                _fill_axis(shifts[i, j, 0], order, ntaps, o0, w0, n0, wt0, idx0)
                _fill_axis(shifts[i, j, 1], order, ntaps, o1, w1, n1, wt1, idx1)
                for x0 in range(w0):
                    for x1 in range(w1):
                        v = 0.0
                        for a in range(ntaps):
                            r = idx0[a, x0]
                            s = 0.0
                            for b in range(ntaps):
                                s += wt1[b] * F[j, r, idx1[b, x1]]
                            v += wt0[a] * s
                        prod[x0 * w1 + x1] *= v
            _kahan(total, comp, prod, weights[i], w0 * w1)
    return np.asarray(total).reshape(w0, w1)


def gather_product_3d(const double[:, :, :, ::1] F, const double[:, :, ::1] shifts, const double[::1] weights,
                      Py_ssize_t o0, Py_ssize_t o1, Py_ssize_t o2,
                      Py_ssize_t w0, Py_ssize_t w1, Py_ssize_t w2, int order):
    cdef int ntaps = _check(order)
    cdef Py_ssize_t m = F.shape[0], n0 = F.shape[1], n1 = F.shape[2], n2 = F.shape[3]
    cdef Py_ssize_t M = shifts.shape[0]
    cdef Py_ssize_t i, j, x0, x1, x2, a, b, c, r0, r1
    cdef double wt0[4]
    cdef double wt1[4]
    cdef double wt2[4]
    cdef double v, s1, s2
    cdef Py_ssize_t[:, ::1] idx0 = np.empty((ntaps, w0), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] idx1 = np.empty((ntaps, w1), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] idx2 = np.empty((ntaps, w2), dtype=np.intp)
    cdef Py_ssize_t ncell = w0 * w1 * w2
    cdef double[::1] total = np.zeros(ncell)
    cdef double[::1] comp = np.zeros(ncell)
    cdef double[::1] prod = np.empty(ncell)
    with nogil:
        for i in range(M):
            for x0 in range(ncell):
                prod[x0] = 1.0
            for j in range(m):
                _fill_axis(shifts[i, j, 0], order, ntaps, o0, w0, n0, wt0, idx0)
                _fill_axis(shifts[i, j, 1], order, ntaps, o1, w1, n1, wt1, idx1)
                _fill_axis(shifts[i, j, 2], order, ntaps, o2, w2, n2, wt2, idx2)
                for x0 in range(w0):
                    for x1 in range(w1):
                        for x2 in range(w2):
                            v = 0.0
                            for a in range(ntaps):
                                r0 = idx0[a, x0]
                                s1 = 0.0
                                for b in range(ntaps):
                                    r1 = idx1[b, x1]
                                    s2 = 0.0
                                    for c in range(ntaps):
                                        s2 += wt2[c] * F[j, r0, r1, idx2[c, x2]]
                                    s1 += wt1[b] * s2
                                v += wt0[a] * s1
                            prod[(x0 * w1 + x1) * w2 + x2] *= v
            _kahan(total, comp, prod, weights[i], ncell)
    return np.asarray(total).reshape(w0, w1, w2)


def ft_points(const double[:, ::1] nodes, const double[::1] weights, const double[:, ::1] xi):
    cdef Py_ssize_t K = xi.shape[0], M = nodes.shape[0], n = nodes.shape[1]
    cdef Py_ssize_t k, i, c
    cdef double ph, re, im
    cdef double[:, ::1] out = np.empty((K, 2))
    with nogil:
        for k in range(K):
            re = 0.0
            im = 0.0
            for i in range(M):
                ph = 0.0
                for c in range(n):
                    ph += xi[k, c] * nodes[i, c]
                ph *= -2.0 * M_PI
                re += weights[i] * cos(ph)
                im += weights[i] * sin(ph)
            out[k, 0] = re
            out[k, 1] = im
    arr = np.asarray(out)
    return arr[:, 0] + 1j * arr[:, 1]


def ft_rays(const double[:, ::1] nodes, const double[::1] weights, const double[:, ::1] dirs,
            const double[::1] starts, double step, Py_ssize_t nsteps):
    cdef Py_ssize_t D = dirs.shape[0], M = nodes.shape[0], n = nodes.shape[1], R = starts.shape[0]
    cdef Py_ssize_t d, i, c, r, s
    cdef double proj, ph, ire, iim, zre, zim, tmp, w
    cdef double[:, :, ::1] acc_re = np.zeros((D, R, nsteps))
    cdef double[:, :, ::1] acc_im = np.zeros((D, R, nsteps))
    with nogil:
        for d in range(D):
            for i in range(M):
                proj = 0.0
                for c in range(n):
                    proj += dirs[d, c] * nodes[i, c]
                ph = -2.0 * M_PI * step * proj
                ire = cos(ph)
                iim = sin(ph)
                w = weights[i]
                for r in range(R):
                    ph = -2.0 * M_PI * starts[r] * proj
                    zre = w * cos(ph)
                    zim = w * sin(ph)
                    for s in range(nsteps):
                        acc_re[d, r, s] += zre
                        acc_im[d, r, s] += zim
                        tmp = zre * ire - zim * iim
                        zim = zre * iim + zim * ire
                        zre = tmp
    return np.asarray(acc_re) + 1j * np.asarray(acc_im)
