"""Pure-Python forward kinematics and Jacobian kernels.

Reference implementation of the compiled kernels in ``_ckernels.pyx``; both
follow the same operation order.  A chain is encoded as parallel sequences:
``codes`` (0-2 rotation about x/y/z, 3-5 translation along x/y/z),
``jidx`` (joint index or -1), ``sign`` (-1 for flipped joints) and
``vals`` (constant argument, ignored for joints).
"""
import math

import numpy as np


def _walk(codes, jidx, sign, vals, q, record):
    # R stored row-major in r[0..8], position in p[0..2]
    r = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
    p = [0.0, 0.0, 0.0]
    axes = []
    for k in range(len(codes)):
        code = codes[k]
        j = jidx[k]
        if j >= 0:
            arg = sign[k] * q[j]
            if record:
                ax = code % 3
                s = sign[k]
                axes.append((code < 3, j,
                             s * r[ax], s * r[3 + ax], s * r[6 + ax],
                             p[0], p[1], p[2]))
        else:
            arg = vals[k]
        if code < 3:
            c = math.cos(arg)
            s_ = math.sin(arg)
            if code == 0:    # columns 1,2 rotate
                a, b = 1, 2
            elif code == 1:  # Ry: columns 2,0
                a, b = 2, 0
            else:            # Rz: columns 0,1
                a, b = 0, 1
            for row in range(3):
                ra = r[3 * row + a]
                rb = r[3 * row + b]
                r[3 * row + a] = c * ra + s_ * rb
                r[3 * row + b] = -s_ * ra + c * rb
        else:
            ax = code - 3
            p[0] += arg * r[ax]
            p[1] += arg * r[3 + ax]
            p[2] += arg * r[6 + ax]
    return r, p, axes


def _pose(r, p):
    return np.array([
        [r[0], r[1], r[2], p[0]],
        [r[3], r[4], r[5], p[1]],
        [r[6], r[7], r[8], p[2]],
        [0.0, 0.0, 0.0, 1.0],
    ])


def fk(codes, jidx, sign, vals, q):
    r, p, _ = _walk(codes, jidx, sign, vals, q, False)
    return _pose(r, p)


def fk_jacobian(codes, jidx, sign, vals, q, n):
    r, p, axes = _walk(codes, jidx, sign, vals, q, True)
    J = np.zeros((6, n))
    for revolute, j, ax, ay, az, ox, oy, oz in axes:
        if revolute:
            dx = p[0] - ox
            dy = p[1] - oy
            dz = p[2] - oz
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
    return _pose(r, p), J
