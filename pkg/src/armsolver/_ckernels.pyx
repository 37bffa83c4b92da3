# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled forward kinematics and Jacobian kernels.

Same encoding and operation order as ``_pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos

cnp.import_array()


cdef inline void _rotate(double* r, int code, double arg) noexcept nogil:
    cdef double c = cos(arg)
    cdef double s = sin(arg)
    cdef int a, b, row
    cdef double ra, rb
    if code == 0:
        a = 1; b = 2
    elif code == 1:
        a = 2; b = 0
    else:
        a = 0; b = 1
    for row in range(3):
        ra = r[3 * row + a]
        rb = r[3 * row + b]
        r[3 * row + a] = c * ra + s * rb
        r[3 * row + b] = -s * ra + c * rb


cdef void _walk(const int[:] codes, const int[:] jidx, const double[:] sign,
                const double[:] vals, const double[:] q,
                double* r, double* p, double[:, :] axes) noexcept nogil:
    cdef Py_ssize_t k, m = codes.shape[0]
    cdef int code, j, ax
    cdef double arg, sg
    r[0] = 1.0; r[1] = 0.0; r[2] = 0.0
    r[3] = 0.0; r[4] = 1.0; r[5] = 0.0
    r[6] = 0.0; r[7] = 0.0; r[8] = 1.0
    p[0] = 0.0; p[1] = 0.0; p[2] = 0.0
    for k in range(m):
        code = codes[k]
        j = jidx[k]
        if j >= 0:
            sg = sign[k]
            arg = sg * q[j]
            if axes.shape[0] > 0:
                ax = code % 3
                axes[j, 0] = 1.0 if code < 3 else 0.0
                axes[j, 1] = sg * r[ax]
                axes[j, 2] = sg * r[3 + ax]
                axes[j, 3] = sg * r[6 + ax]
                axes[j, 4] = p[0]
                axes[j, 5] = p[1]
                axes[j, 6] = p[2]
        else:
            arg = vals[k]
        if code < 3:
            _rotate(r, code, arg)
        else:
            ax = code - 3
            p[0] += arg * r[ax]
            p[1] += arg * r[3 + ax]
            p[2] += arg * r[6 + ax]


cdef object _pose(double* r, double* p):
    T = np.empty((4, 4))
    cdef double[:, :] t = T
    t[0, 0] = r[0]; t[0, 1] = r[1]; t[0, 2] = r[2]; t[0, 3] = p[0]
    t[1, 0] = r[3]; t[1, 1] = r[4]; t[1, 2] = r[5]; t[1, 3] = p[1]
    t[2, 0] = r[6]; t[2, 1] = r[7]; t[2, 2] = r[8]; t[2, 3] = p[2]
    t[3, 0] = 0.0; t[3, 1] = 0.0; t[3, 2] = 0.0; t[3, 3] = 1.0
    return T


def fk(const int[:] codes, const int[:] jidx, const double[:] sign,
       const double[:] vals, const double[:] q):
    cdef double r[9]
    cdef double p[3]
    cdef double[:, :] none = np.empty((0, 7))
    _walk(codes, jidx, sign, vals, q, r, p, none)
    return _pose(r, p)


def fk_jacobian(const int[:] codes, const int[:] jidx, const double[:] sign,
                const double[:] vals, const double[:] q, int n):
    cdef double r[9]
    cdef double p[3]
    axes_arr = np.zeros((max(n, 1), 7))
    cdef double[:, :] axes = axes_arr
    J_arr = np.zeros((6, n))
    cdef double[:, :] J = J_arr
    cdef int j
    cdef double ax, ay, az, dx, dy, dz
    if n == 0:
        axes = np.empty((0, 7))
    _walk(codes, jidx, sign, vals, q, r, p, axes)
    for j in range(n):
        ax = axes[j, 1]; ay = axes[j, 2]; az = axes[j, 3]
        if axes[j, 0] != 0.0:
            dx = p[0] - axes[j, 4]
            dy = p[1] - axes[j, 5]
            dz = p[2] - axes[j, 6]
            J[0, j] = ay * dz - az * dy
            J[1, j] = az * dx - ax * dz
            J[2, j] = ax * dy - ay * dx
            J[3, j] = ax
            J[4, j] = ay
            J[5, j] = az
        else:
            J[0, j] = ax
            J[1, j] = ay
            J[2, j] = az
    return _pose(r, p), J_arr
