"""Orientation charts, conversions and manifold operators.

Quaternions are scalar-first ``[w, x, y, z]`` Hamilton quaternions describing
the body-to-world rotation. Every function broadcasts over leading axes, so
``q`` may be ``(4,)`` or ``(..., 4)``; rotation vectors are ``(..., 3)`` and
rotation matrices ``(..., 3, 3)``.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._kernels import jacobi_eigh
from .errors import DegenerateMean, NotAntisymmetric, NotRotation

SMALL_ANGLE = 1e-8
NEAR_PI = 1e-4

Q_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def skew(v: ArrayLike) -> NDArray:
    """Skew-symmetric matrix with ``skew(v) @ w == cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def vex(M: ArrayLike, atol: float = 1e-8) -> NDArray:
    """Inverse of :func:`skew`.

    Raises
    ------
    NotAntisymmetric
        If ``||M + M^T|| >= atol``.
    """
    M = np.asarray(M, dtype=float)
    sym = np.linalg.norm(M + np.swapaxes(M, -1, -2), axis=(-2, -1))
    if np.any(sym >= atol):
        raise NotAntisymmetric(f"matrix is not antisymmetric (||M + M^T|| = {np.max(sym):.3g})")
    return np.stack([M[..., 2, 1], M[..., 0, 2], M[..., 1, 0]], axis=-1)


def antisym_project(M: ArrayLike) -> NDArray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M - np.swapaxes(M, -1, -2))


def normalize(q: ArrayLike) -> NDArray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def canonicalize(q: ArrayLike) -> NDArray:
    """Pick the representative of ``{q, -q}`` whose first nonzero entry is positive."""
    q = np.array(q, dtype=float)
    first = np.argmax(q != 0.0, axis=-1)[..., None]
    lead = np.take_along_axis(q, first, axis=-1)
    return np.where(lead < 0.0, -q, q)


def qmul(q1: ArrayLike, q2: ArrayLike) -> NDArray:
    """Hamilton product ``q1 (x) q2``, renormalised."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    w1, v1 = q1[..., :1], q1[..., 1:]
    w2, v2 = q2[..., :1], q2[..., 1:]
    w = w1 * w2 - np.sum(v1 * v2, axis=-1, keepdims=True)
    v = w1 * v2 + w2 * v1 + np.cross(v1, v2)
    return normalize(np.concatenate([w, v], axis=-1))


def qinv(q: ArrayLike) -> NDArray:
    q = np.array(q, dtype=float)
    q[..., 1:] *= -1.0
    return q


def quat_to_rot(q: ArrayLike) -> NDArray:
    q = np.asarray(q, dtype=float)
    w = q[..., 0, None, None]
    v = q[..., 1:]
    vv = np.sum(v * v, axis=-1)[..., None, None]
    eye = np.broadcast_to(np.eye(3), q.shape[:-1] + (3, 3))
    return (w * w - vv) * eye + 2.0 * v[..., :, None] * v[..., None, :] + 2.0 * w * skew(v)


def _check_rotation(R: NDArray, tol: float = 1e-6) -> None:
    RtR = np.swapaxes(R, -1, -2) @ R
    orth = np.max(np.abs(RtR - np.eye(3)), axis=(-2, -1))
    det = np.linalg.det(R)
    if np.any(orth > tol) or np.any(np.abs(det - 1.0) > tol) or not np.all(np.isfinite(R)):
        raise NotRotation("matrix is not a proper rotation")


def rot_to_quat_trace(R: ArrayLike) -> NDArray:
    """Trace-based extraction; undefined when the rotation angle approaches pi."""
    R = np.asarray(R, dtype=float)
    w = 0.5 * np.sqrt(1.0 + R[..., 0, 0] + R[..., 1, 1] + R[..., 2, 2])
    x = (R[..., 2, 1] - R[..., 1, 2]) / (4.0 * w)
    y = (R[..., 0, 2] - R[..., 2, 0]) / (4.0 * w)
    z = (R[..., 1, 0] - R[..., 0, 1]) / (4.0 * w)
    return np.stack([w, x, y, z], axis=-1)


def rot_to_quat(R: ArrayLike) -> NDArray:
    """Rotation matrix to canonical unit quaternion.

    Uses the largest of ``(w^2, x^2, y^2, z^2)`` as pivot so the result stays
    accurate for angles near pi, where the trace formula divides by ``w ~ 0``.
    """
    R = np.asarray(R, dtype=float)
    _check_rotation(R)
    m = R.reshape(-1, 3, 3)
    out = np.empty((m.shape[0], 4))
    for i, r in enumerate(m):
        tr = r[0, 0] + r[1, 1] + r[2, 2]
        k = int(np.argmax([tr, r[0, 0], r[1, 1], r[2, 2]]))
        if k == 0:
            s = 2.0 * np.sqrt(1.0 + tr)
            q = [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
        elif k == 1:
            s = 2.0 * np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
            q = [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
        elif k == 2:
            s = 2.0 * np.sqrt(1.0 - r[0, 0] + r[1, 1] - r[2, 2])
            q = [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
        else:
            s = 2.0 * np.sqrt(1.0 - r[0, 0] - r[1, 1] + r[2, 2])
            q = [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
        out[i] = q
    return canonicalize(normalize(out)).reshape(R.shape[:-2] + (4,))


def rotvec_to_rot(r: ArrayLike) -> NDArray:
    """Rodrigues formula ``exp([r]x)``."""
    r = np.asarray(r, dtype=float)
    theta = np.linalg.norm(r, axis=-1)[..., None, None]
    small = theta < SMALL_ANGLE
    t = np.where(small, 1.0, theta)
    t2 = theta * theta
    a = np.where(small, 1.0 - t2 / 6.0, np.sin(t) / t)
    b = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(t)) / (t * t))
    K = skew(r)
    return np.eye(3) + a * K + b * (K @ K)


def rot_to_rotvec(R: ArrayLike) -> NDArray:
    """Minimal-angle rotation vector of ``R`` (angle in ``[0, pi]``)."""
    R = np.asarray(R, dtype=float)
    m = R.reshape(-1, 3, 3)
    out = np.empty((m.shape[0], 3))
    for i, r in enumerate(m):
        a = vex(antisym_project(r))  # sin(theta) * u
        c = np.clip(0.5 * (np.trace(r) - 1.0), -1.0, 1.0)
        s = np.linalg.norm(a)
        theta = np.arctan2(s, c)
        if theta < SMALL_ANGLE:
            out[i] = (1.0 + theta * theta / 6.0) * a
        elif theta > np.pi - NEAR_PI:
            # sin(theta) -> 0; recover the axis from the symmetric part
            sym = 0.5 * (r + r.T) - c * np.eye(3)
            j = int(np.argmax(np.diag(sym)))
            u = sym[:, j] / np.linalg.norm(sym[:, j])
            if np.dot(u, a) < 0.0 or (s == 0.0 and u[np.flatnonzero(u)[0]] < 0.0):
                u = -u
            out[i] = theta * u
        else:
            out[i] = (theta / s) * a
    return out.reshape(R.shape[:-2] + (3,))


def rotvec_to_quat(r: ArrayLike) -> NDArray:
    r = np.asarray(r, dtype=float)
    theta = np.linalg.norm(r, axis=-1, keepdims=True)
    small = theta < SMALL_ANGLE
    t = np.where(small, 1.0, theta)
    k = np.where(small, 0.5 - theta * theta / 48.0, np.sin(0.5 * t) / t)
    return np.concatenate([np.cos(0.5 * theta), k * r], axis=-1)


def quat_to_rotvec(q: ArrayLike) -> NDArray:
    """Minimal rotation vector of ``q``; ``q`` and ``-q`` give the same result."""
    q = canonicalize(q)
    w = q[..., :1]
    v = q[..., 1:]
    s = np.linalg.norm(v, axis=-1, keepdims=True)
    small = s < SMALL_ANGLE
    k = np.where(small, 2.0 / np.where(small, w, 1.0), 2.0 * np.arctan2(s, w) / np.where(small, 1.0, s))
    return k * v


def oplus(q: ArrayLike, r: ArrayLike) -> NDArray:
    """``q (+) r = q_r(r) (x) q``."""
    return qmul(rotvec_to_quat(r), q)


def ominus_rv(q: ArrayLike, r: ArrayLike) -> NDArray:
    """``q (-) r = q_r(r)^-1 (x) q``."""
    return qmul(qinv(rotvec_to_quat(r)), q)


def ominus_qq(q1: ArrayLike, q2: ArrayLike) -> NDArray:
    """Rotation vector taking ``q2`` to ``q1``: ``r_q(q1 (x) q2^-1)``."""
    return quat_to_rotvec(qmul(q1, qinv(q2)))


def quat_weighted_mean(qs: ArrayLike, ws: ArrayLike, gap_tol: float = 1e-12) -> NDArray:
    """Weighted quaternion average.

    The mean is the unit eigenvector of ``M = sum_i w_i q_i q_i^T`` whose
    eigenvalue has the largest magnitude. Individual weights may be negative
    as long as they sum to a positive value.

    Raises
    ------
    DegenerateMean
        If the two largest eigenvalue magnitudes differ by less than
        ``gap_tol`` relative to the largest.
    """
    qs = np.asarray(qs, dtype=float).reshape(-1, 4)
    ws = np.asarray(ws, dtype=float).reshape(-1)
    if qs.shape[0] == 0:
        raise ValueError("need at least one quaternion")
    if qs.shape[0] != ws.shape[0]:
        raise ValueError("quaternion and weight counts differ")
    if not np.sum(ws) > 0.0:
        raise ValueError("weights must sum to a positive value")
    M = np.einsum("i,ij,ik->jk", ws, qs, qs)
    evals, evecs = jacobi_eigh(M)
    mags = np.sort(np.abs(evals))
    if mags[-1] - mags[-2] < gap_tol * mags[-1]:
        raise DegenerateMean("largest eigenvalue of the quaternion scatter matrix is not unique")
    return canonicalize(normalize(evecs[:, np.argmax(np.abs(evals))]))
