"""Quaternion navigation unscented Kalman filter.

One filter cycle augments the estimate with the IMU noise, draws 43 sigma
points on the manifold (tangent dimension 21), pushes them through the IMU
transition, recombines them with a weighted quaternion mean, and, when a
feature frame is available, corrects the prediction through the feature
measurement model. Covariances always live on the 15-dimensional tangent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import backend
from .errors import BadCovariance, DegenerateMean, NonMonotoneTime
from .model import (
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
from .rotation import quat_weighted_mean
from .unscented import SigmaSet, UtParams, eig_floor, kalman_gain, sigma_offsets, symmetrize, ut_weights

log = logging.getLogger(__name__)

AUG_DOF = TANGENT_DIM + NOISE_DIM  # 21


@dataclass(frozen=True)
class FilterEstimate:
    """Posterior mean, 15x15 tangent covariance and timestamp (ns).

    ``info`` carries per-step diagnostics and is ignored by equality.
    """

    x_hat: NavState
    P: NDArray
    t: int
    info: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class AugmentedEstimate:
    x: NavState
    noise_mean: NDArray
    P_a: NDArray


@dataclass(frozen=True)
class PredictionBundle:
    sigma_states: NDArray  # (43, 16) propagated sigma points
    residuals: NDArray  # (43, 15) sigma_states (-) x_pred
    x_pred: NavState
    P_pred: NDArray
    wm: NDArray
    wc: NDArray
    t: int
    degenerate_mean: bool = False


def _check_covariance(P: NDArray, dim: int, name: str = "P0") -> NDArray:
    P = np.asarray(P, dtype=float)
    if P.shape != (dim, dim):
        raise BadCovariance(f"{name} must be {dim}x{dim}, got {P.shape}")
    if not np.all(np.isfinite(P)):
        raise BadCovariance(f"{name} has non-finite entries")
    if np.max(np.abs(P - P.T)) > 1e-6:
        raise BadCovariance(f"{name} is not symmetric")
    P = symmetrize(P)
    evals = np.linalg.eigvalsh(P)
    if evals[0] < -1e-9 * max(1.0, np.trace(P)):
        raise BadCovariance(f"{name} is not positive semidefinite")
    return P


def _params(params: UtParams | None) -> UtParams:
    if params is None:
        return UtParams.default(AUG_DOF)
    if params.dof != AUG_DOF:
        raise ValueError(f"the navigation filter needs UtParams.dof == {AUG_DOF}")
    return params


def init(x0: NavState, P0: ArrayLike, cfg: NoiseConfig, params: UtParams | None = None, t0: int = 0) -> FilterEstimate:
    _params(params)
    return FilterEstimate(x0, _check_covariance(P0, TANGENT_DIM), int(t0))


def augment(est: FilterEstimate, cfg: NoiseConfig) -> AugmentedEstimate:
    P_a = np.zeros((AUG_DOF, AUG_DOF))
    P_a[:TANGENT_DIM, :TANGENT_DIM] = est.P
    P_a[TANGENT_DIM:, TANGENT_DIM:] = input_noise_matrix(cfg)
    return AugmentedEstimate(est.x_hat, np.zeros(NOISE_DIM), P_a)


def manifold_sigma_points(aug: AugmentedEstimate, params: UtParams | None = None) -> SigmaSet:
    """43 augmented sigma points as rows ``[state(16), noise(6)]``.

    The attitude block of each offset is applied with the left ``oplus``; the
    negative points use ``q_r(d)^-1 (x) q``, which equals ``q (+) (-d)``.
    """
    params = _params(params)
    offsets = sigma_offsets(aug.P_a, params)
    pts = np.empty((offsets.shape[0], 16 + NOISE_DIM))
    pts[:, :16] = backend.oplus_batch(aug.x.to_array(), np.ascontiguousarray(offsets[:, :TANGENT_DIM]))
    pts[:, 16:] = aug.noise_mean + offsets[:, TANGENT_DIM:]
    wm, wc = ut_weights(params)
    return SigmaSet(pts, wm, wc)


def _sigma_mean(X: NDArray, wm: NDArray) -> tuple[NDArray, bool]:
    x = np.empty(16)
    degenerate = False
    try:
        x[0:4] = quat_weighted_mean(X[:, 0:4], wm)
    except DegenerateMean:
        log.warning("degenerate quaternion mean; using the central sigma point attitude")
        x[0:4] = X[0, 0:4]
        degenerate = True
    x[4:] = backend.weighted_sum(wm, np.ascontiguousarray(X[:, 4:]))
    return x, degenerate


def predict(
    est: FilterEstimate,
    u: ImuSample,
    dt: float,
    cfg: NoiseConfig,
    params: UtParams | None = None,
    floor: bool = False,
) -> PredictionBundle:
    if not dt > 0.0:
        raise NonMonotoneTime(f"non-positive propagation interval {dt}")
    sigma = manifold_sigma_points(augment(est, cfg), params)
    X = np.ascontiguousarray(sigma.points[:, :16])
    N = np.ascontiguousarray(sigma.points[:, 16:])
    Xp = backend.transition_batch(X, N, u.omega_m, u.accel_m, cfg.gravity, float(dt))
    x_pred, degenerate = _sigma_mean(Xp, sigma.wm)
    D = backend.ominus_batch(Xp, x_pred)
    P = symmetrize(backend.weighted_outer(sigma.wc, D, D) + process_noise_matrix(cfg, dt))
    if floor:
        P = eig_floor(P)
    t_new = int(u.t) + int(round(dt * 1e9))
    return PredictionBundle(Xp, D, NavState.from_array(x_pred), P, sigma.wm, sigma.wc, t_new, degenerate)


def update_with(
    bundle: PredictionBundle,
    z: ArrayLike,
    h_batch: Callable[[NDArray], NDArray],
    C_z: ArrayLike,
    floor: bool = False,
) -> FilterEstimate:
    """Correct a prediction with an arbitrary measurement ``z = h(x) + n``.

    ``h_batch`` maps ``(n, 16)`` state rows to ``(n, m)`` predicted
    measurements; ``C_z`` is the additive measurement noise covariance.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    Z = np.ascontiguousarray(h_batch(bundle.sigma_states))
    z_hat = backend.weighted_sum(bundle.wm, Z)
    dZ = Z - z_hat
    P_zz = symmetrize(backend.weighted_outer(bundle.wc, dZ, dZ) + C_z)
    P_xz = backend.weighted_outer(bundle.wc, bundle.residuals, dZ)
    K, cond = kalman_gain(P_xz, P_zz)
    innovation = z - z_hat
    delta = K @ innovation
    x_new = backend.oplus_batch(bundle.x_pred.to_array(), delta[None, :])[0]
    P = symmetrize(bundle.P_pred - K @ P_zz @ K.T)
    if floor:
        P = eig_floor(P)
    info = {
        "updated": True,
        "m_z": int(z.size),
        "innovation_norm": float(np.linalg.norm(innovation)),
        "condition": cond,
        "degenerate_mean": bundle.degenerate_mean,
    }
    return FilterEstimate(NavState.from_array(x_new), P, bundle.t, info)


def update(
    bundle: PredictionBundle,
    frame: FeatureFrame,
    cfg: NoiseConfig,
    params: UtParams | None = None,
    floor: bool = False,
) -> FilterEstimate:
    f_w = frame.f_w
    return update_with(
        bundle,
        frame.z,
        lambda X: backend.measurement_batch(X, f_w),
        measurement_noise_matrix(cfg.c_f, frame.m_f),
        floor=floor,
    )


def prediction_estimate(bundle: PredictionBundle) -> FilterEstimate:
    info = {"updated": False, "m_z": 0, "innovation_norm": 0.0, "condition": 0.0,
            "degenerate_mean": bundle.degenerate_mean}
    return FilterEstimate(bundle.x_pred, bundle.P_pred, bundle.t, info)


def step(
    est: FilterEstimate,
    u: ImuSample,
    frame: FeatureFrame | None,
    dt: float,
    cfg: NoiseConfig,
    params: UtParams | None = None,
    floor: bool = False,
) -> FilterEstimate:
    """Propagate over ``[u.t, u.t + dt]``, then correct if ``frame`` is given."""
    if u.t < est.t:
        raise NonMonotoneTime(f"IMU sample at {u.t} ns precedes the estimate at {est.t} ns")
    if frame is not None and frame.t <= est.t:
        raise NonMonotoneTime(f"feature frame at {frame.t} ns is not newer than the estimate at {est.t} ns")
    bundle = predict(est, u, dt, cfg, params, floor)
    if frame is None:
        return prediction_estimate(bundle)
    return update(bundle, frame, cfg, params, floor)


class QNUKF:
    """Stateful wrapper holding one estimate stream.

    Examples
    --------
    >>> f = QNUKF(x0, P0, NoiseConfig.default())
    >>> for u, dt, frame in stream:
    ...     f.step(u, dt, frame)
    """

    name = "qnukf"

    def __init__(
        self,
        x0: NavState,
        P0: ArrayLike,
        cfg: NoiseConfig,
        params: UtParams | None = None,
        t0: int = 0,
        floor: bool = False,
    ):
        self.cfg = cfg
        self.params = _params(params)
        self.floor = floor
        self.estimate = init(x0, P0, cfg, self.params, t0)
        self.n_predict = 0
        self.n_update = 0

    def step(self, u: ImuSample, dt: float, frame: FeatureFrame | None = None) -> FilterEstimate:
        self.estimate = step(self.estimate, u, frame, dt, self.cfg, self.params, self.floor)
        self.n_predict += 1
        self.n_update += frame is not None
        return self.estimate
