"""Loop kernels compiled with numba when it is available.

State rows are 16 wide ``[q(4), p(3), v(3), b_w(3), b_a(3)]``; tangent rows
are 15 wide ``[dr(3), dp(3), dv(3), db_w(3), db_a(3)]``. All reductions run
in ascending index order so results do not depend on thread count.
"""

import numpy as np

from ._jit import jit

_SMALL = 1e-8


@jit
def jacobi_eigh(A):
    """Cyclic Jacobi eigen-decomposition of a small symmetric matrix.

    Returns ``(evals, evecs)`` with eigenvectors in the columns.
    """
    n = A.shape[0]
    a = A.copy()
    V = np.eye(n)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = np.sqrt(scale)
    for _ in range(30):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        if np.sqrt(off) <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    evals = np.empty(n)
    for i in range(n):
        evals[i] = a[i, i]
    return evals, V


@jit
def _qmul(a, b, out):
    w = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    x = a[0] * b[1] + b[0] * a[1] + a[2] * b[3] - a[3] * b[2]
    y = a[0] * b[2] + b[0] * a[2] + a[3] * b[1] - a[1] * b[3]
    z = a[0] * b[3] + b[0] * a[3] + a[1] * b[2] - a[2] * b[1]
    n = np.sqrt(w * w + x * x + y * y + z * z)
    out[0] = w / n
    out[1] = x / n
    out[2] = y / n
    out[3] = z / n


@jit
def _rv2q(r, out):
    th = np.sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2])
    if th < _SMALL:
        k = 0.5 - th * th / 48.0
    else:
        k = np.sin(0.5 * th) / th
    out[0] = np.cos(0.5 * th)
    out[1] = k * r[0]
    out[2] = k * r[1]
    out[3] = k * r[2]


@jit
def _q2rv(q, out):
    w, x, y, z = q[0], q[1], q[2], q[3]
    flip = w < 0.0
    if w == 0.0:
        if x != 0.0:
            flip = x < 0.0
        elif y != 0.0:
            flip = y < 0.0
        else:
            flip = z < 0.0
    if flip:
        w, x, y, z = -w, -x, -y, -z
    s = np.sqrt(x * x + y * y + z * z)
    if s < _SMALL:
        k = 2.0 / w
    else:
        k = 2.0 * np.arctan2(s, w) / s
    out[0] = k * x
    out[1] = k * y
    out[2] = k * z


@jit
def _q2R(q, R):
    w, x, y, z = q[0], q[1], q[2], q[3]
    R[0, 0] = w * w + x * x - y * y - z * z
    R[0, 1] = 2.0 * (x * y - w * z)
    R[0, 2] = 2.0 * (x * z + w * y)
    R[1, 0] = 2.0 * (x * y + w * z)
    R[1, 1] = w * w - x * x + y * y - z * z
    R[1, 2] = 2.0 * (y * z - w * x)
    R[2, 0] = 2.0 * (x * z - w * y)
    R[2, 1] = 2.0 * (y * z + w * x)
    R[2, 2] = w * w - x * x - y * y + z * z


@jit
def transition_batch(X, N, omega_m, accel_m, g, dt):
    n = X.shape[0]
    out = np.empty((n, 16))
    R = np.empty((3, 3))
    dq = np.empty(4)
    r = np.empty(3)
    qn = np.empty(4)
    for i in range(n):
        x = X[i]
        for k in range(3):
            r[k] = (omega_m[k] - x[10 + k] - N[i, k]) * dt
        _rv2q(r, dq)
        _qmul(x[0:4], dq, qn)
        _q2R(x[0:4], R)
        for k in range(4):
            out[i, k] = qn[k]
        for k in range(3):
            wk = g[k]
            for j in range(3):
                wk += R[k, j] * (accel_m[j] - x[13 + j] - N[i, 3 + j])
            out[i, 4 + k] = x[4 + k] + x[7 + k] * dt + 0.5 * wk * dt * dt
            out[i, 7 + k] = x[7 + k] + wk * dt
        for k in range(10, 16):
            out[i, k] = x[k]
    return out


@jit
def measurement_batch(X, F):
    n = X.shape[0]
    m = F.shape[0]
    out = np.empty((n, 3 * m))
    R = np.empty((3, 3))
    for i in range(n):
        _q2R(X[i, 0:4], R)
        for f in range(m):
            d0 = F[f, 0] - X[i, 4]
            d1 = F[f, 1] - X[i, 5]
            d2 = F[f, 2] - X[i, 6]
            for k in range(3):
                out[i, 3 * f + k] = R[0, k] * d0 + R[1, k] * d1 + R[2, k] * d2
    return out


@jit
def oplus_batch(x, D):
    n = D.shape[0]
    out = np.empty((n, 16))
    dq = np.empty(4)
    qn = np.empty(4)
    for i in range(n):
        _rv2q(D[i, 0:3], dq)
        _qmul(dq, x[0:4], qn)
        for k in range(4):
            out[i, k] = qn[k]
        for k in range(12):
            out[i, 4 + k] = x[4 + k] + D[i, 3 + k]
    return out


@jit
def ominus_batch(X, x):
    n = X.shape[0]
    out = np.empty((n, 15))
    qi = np.empty(4)
    qi[0] = x[0]
    qi[1] = -x[1]
    qi[2] = -x[2]
    qi[3] = -x[3]
    dq = np.empty(4)
    r = np.empty(3)
    for i in range(n):
        _qmul(X[i, 0:4], qi, dq)
        _q2rv(dq, r)
        for k in range(3):
            out[i, k] = r[k]
        for k in range(12):
            out[i, 3 + k] = X[i, 4 + k] - x[4 + k]
    return out


@jit
def weighted_sum(w, A):
    out = np.zeros(A.shape[1])
    for j in range(A.shape[0]):
        for k in range(A.shape[1]):
            out[k] += w[j] * A[j, k]
    return out


@jit
def weighted_outer(w, A, B):
    """``sum_j w[j] * outer(A[j], B[j])``."""
    out = np.zeros((A.shape[1], B.shape[1]))
    for j in range(A.shape[0]):
        for k in range(A.shape[1]):
            c = w[j] * A[j, k]
            for l in range(B.shape[1]):
                out[k, l] += c * B[j, l]
    return out
