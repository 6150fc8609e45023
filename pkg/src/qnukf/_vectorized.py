"""Pure-numpy counterparts of the kernels in ``_kernels``."""

import numpy as np

from . import rotation as rot


def transition_batch(X, N, omega_m, accel_m, g, dt):
    q = X[:, 0:4]
    omega = omega_m - X[:, 10:13] - N[:, 0:3]
    acc = accel_m - X[:, 13:16] - N[:, 3:6]
    w = g + np.einsum("nij,nj->ni", rot.quat_to_rot(q), acc)
    out = np.empty_like(X)
    out[:, 0:4] = rot.qmul(q, rot.rotvec_to_quat(omega * dt))
    out[:, 4:7] = X[:, 4:7] + X[:, 7:10] * dt + 0.5 * w * dt * dt
    out[:, 7:10] = X[:, 7:10] + w * dt
    out[:, 10:16] = X[:, 10:16]
    return out


def measurement_batch(X, F):
    R = rot.quat_to_rot(X[:, 0:4])
    d = F[None, :, :] - X[:, None, 4:7]
    return np.einsum("nji,nfj->nfi", R, d).reshape(X.shape[0], -1)


def oplus_batch(x, D):
    out = np.empty((D.shape[0], 16))
    out[:, 0:4] = rot.oplus(x[0:4], D[:, 0:3])
    out[:, 4:16] = x[4:16] + D[:, 3:15]
    return out


def ominus_batch(X, x):
    out = np.empty((X.shape[0], 15))
    out[:, 0:3] = rot.ominus_qq(X[:, 0:4], x[0:4])
    out[:, 3:15] = X[:, 4:16] - x[4:16]
    return out


def weighted_sum(w, A):
    return np.einsum("j,jk->k", w, A)


def weighted_outer(w, A, B):
    return np.einsum("j,jk,jl->kl", w, A, B)
