"""Error-state EKF baseline sharing the navigation model.

Jacobians are central differences on the 15-dimensional tangent, so the
baseline linearises exactly the same transition and measurement functions the
unscented filter propagates.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import backend
from .errors import NonFiniteInput, NonMonotoneTime
from .filter import FilterEstimate, _check_covariance
from .model import (
    GRAVITY,
    NOISE_DIM,
    TANGENT_DIM,
    FeatureFrame,
    ImuSample,
    NavState,
    NoiseConfig,
    input_noise_matrix,
    measurement_noise_matrix,
    process_noise_matrix,
)
from .unscented import eig_floor, kalman_gain, symmetrize

EPS = 1e-6

EkfEstimate = FilterEstimate


def _transition_jacobians(x: NavState, u: ImuSample, dt: float, gravity, eps: float = EPS):
    """Return ``(f(x), F, G)`` with ``F`` 15x15 (state) and ``G`` 15x6 (noise)."""
    x0 = x.to_array()
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(u.omega_m)) and np.all(np.isfinite(u.accel_m))):
        raise NonFiniteInput("EKF received non-finite input")
    E = eps * np.eye(TANGENT_DIM)
    rows = backend.oplus_batch(x0, np.concatenate([np.zeros((1, TANGENT_DIM)), E, -E]))
    noise = np.zeros((rows.shape[0] + 2 * NOISE_DIM, NOISE_DIM))
    En = eps * np.eye(NOISE_DIM)
    noise[rows.shape[0]:] = np.concatenate([En, -En])
    X = np.concatenate([rows, np.repeat(x0[None, :], 2 * NOISE_DIM, axis=0)])
    Y = backend.transition_batch(X, noise, u.omega_m, u.accel_m, np.asarray(gravity, dtype=float), float(dt))
    f0 = Y[0]
    D = backend.ominus_batch(Y, f0)
    n = TANGENT_DIM
    F = (D[1:1 + n] - D[1 + n:1 + 2 * n]).T / (2.0 * eps)
    m = 1 + 2 * n
    G = (D[m:m + NOISE_DIM] - D[m + NOISE_DIM:]).T / (2.0 * eps)
    return f0, F, G


def numeric_jacobian_f(x: NavState, u: ImuSample, dt: float, gravity: ArrayLike = GRAVITY, eps: float = EPS) -> NDArray:
    return _transition_jacobians(x, u, dt, gravity, eps)[1]


def numeric_noise_jacobian(x: NavState, u: ImuSample, dt: float, gravity: ArrayLike = GRAVITY, eps: float = EPS) -> NDArray:
    return _transition_jacobians(x, u, dt, gravity, eps)[2]


def _jacobian_h(x0: NDArray, h_batch: Callable[[NDArray], NDArray], eps: float = EPS):
    E = eps * np.eye(TANGENT_DIM)
    rows = backend.oplus_batch(x0, np.concatenate([np.zeros((1, TANGENT_DIM)), E, -E]))
    Z = h_batch(rows)
    n = TANGENT_DIM
    return Z[0], (Z[1:1 + n] - Z[1 + n:]).T / (2.0 * eps)


def numeric_jacobian_h(x: NavState, f_w: ArrayLike, eps: float = EPS) -> NDArray:
    f_w = np.asarray(f_w, dtype=float).reshape(-1, 3)
    return _jacobian_h(x.to_array(), lambda X: backend.measurement_batch(X, f_w), eps)[1]


def ekf_predict(est: EkfEstimate, u: ImuSample, dt: float, cfg: NoiseConfig, floor: bool = False) -> EkfEstimate:
    if not dt > 0.0:
        raise NonMonotoneTime(f"non-positive propagation interval {dt}")
    f0, F, G = _transition_jacobians(est.x_hat, u, dt, cfg.gravity)
    P = F @ est.P @ F.T + process_noise_matrix(cfg, dt) + G @ input_noise_matrix(cfg) @ G.T
    P = eig_floor(P) if floor else symmetrize(P)
    info = {"updated": False, "m_z": 0, "innovation_norm": 0.0, "condition": 0.0, "degenerate_mean": False}
    return EkfEstimate(NavState.from_array(f0), P, int(u.t) + int(round(dt * 1e9)), info)


def ekf_update_with(
    est: EkfEstimate,
    z: ArrayLike,
    h_batch: Callable[[NDArray], NDArray],
    C_z: ArrayLike,
    floor: bool = False,
) -> EkfEstimate:
    z = np.asarray(z, dtype=float).reshape(-1)
    x0 = est.x_hat.to_array()
    z_hat, H = _jacobian_h(x0, h_batch)
    PHt = est.P @ H.T
    S = symmetrize(H @ PHt + C_z)
    K, cond = kalman_gain(PHt, S)
    innovation = z - z_hat
    x_new = backend.oplus_batch(x0, (K @ innovation)[None, :])[0]
    P = symmetrize(est.P - K @ S @ K.T)
    if floor:
        P = eig_floor(P)
    info = {"updated": True, "m_z": int(z.size), "innovation_norm": float(np.linalg.norm(innovation)),
            "condition": cond, "degenerate_mean": False}
    return EkfEstimate(NavState.from_array(x_new), P, est.t, info)


def ekf_update(est: EkfEstimate, frame: FeatureFrame, cfg: NoiseConfig, floor: bool = False) -> EkfEstimate:
    f_w = frame.f_w
    return ekf_update_with(
        est, frame.z, lambda X: backend.measurement_batch(X, f_w), measurement_noise_matrix(cfg.c_f, frame.m_f), floor
    )


def ekf_step(
    est: EkfEstimate,
    u: ImuSample,
    frame: FeatureFrame | None,
    dt: float,
    cfg: NoiseConfig,
    floor: bool = False,
) -> EkfEstimate:
    if u.t < est.t:
        raise NonMonotoneTime(f"IMU sample at {u.t} ns precedes the estimate at {est.t} ns")
    if frame is not None and frame.t <= est.t:
        raise NonMonotoneTime(f"feature frame at {frame.t} ns is not newer than the estimate at {est.t} ns")
    pred = ekf_predict(est, u, dt, cfg, floor)
    if frame is None:
        return pred
    return ekf_update(pred, frame, cfg, floor)


class EKF:
    name = "ekf"

    def __init__(self, x0: NavState, P0: ArrayLike, cfg: NoiseConfig, t0: int = 0, floor: bool = False):
        self.cfg = cfg
        self.floor = floor
        self.estimate = EkfEstimate(x0, _check_covariance(P0, TANGENT_DIM), int(t0))
        self.n_predict = 0
        self.n_update = 0

    def step(self, u: ImuSample, dt: float, frame: FeatureFrame | None = None) -> EkfEstimate:
        self.estimate = ekf_step(self.estimate, u, frame, dt, self.cfg, self.floor)
        self.n_predict += 1
        self.n_update += frame is not None
        return self.estimate
