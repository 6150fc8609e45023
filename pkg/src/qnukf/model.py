"""Navigation state space, IMU-driven transition and feature measurement model.

The 16-entry state is stored as ``[q(4), p(3), v(3), b_w(3), b_a(3)]`` with a
15-entry tangent ``[dr(3), dp(3), dv(3), db_w(3), db_a(3)]``; the first
three tangent entries are a rotation vector acting on ``q`` from the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import backend
from .errors import EmptyFeatureSet, NonFiniteInput

STATE_DIM = 16
TANGENT_DIM = 15
NOISE_DIM = 6
GRAVITY = np.array([0.0, 0.0, -9.80665])


def _vec3(a) -> NDArray:
    a = np.asarray(a, dtype=float).reshape(3)
    return a.copy()


@dataclass(frozen=True)
class NavState:
    """Attitude (body to world), position, velocity and IMU biases."""

    q: NDArray
    p: NDArray = field(default_factory=lambda: np.zeros(3))
    v: NDArray = field(default_factory=lambda: np.zeros(3))
    b_w: NDArray = field(default_factory=lambda: np.zeros(3))
    b_a: NDArray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(4)
        nq = np.linalg.norm(q)
        if not np.isfinite(nq) or abs(nq - 1.0) > 1e-6:
            raise ValueError(f"attitude quaternion must be unit (norm {nq})")
        object.__setattr__(self, "q", q / nq)
        for name in ("p", "v", "b_w", "b_a"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))

    def to_array(self) -> NDArray:
        return np.concatenate([self.q, self.p, self.v, self.b_w, self.b_a])

    @classmethod
    def from_array(cls, a: ArrayLike) -> "NavState":
        a = np.asarray(a, dtype=float)
        return cls(a[0:4], a[4:7], a[7:10], a[10:13], a[13:16])

    def __eq__(self, other):
        if not isinstance(other, NavState):
            return NotImplemented
        return np.array_equal(self.to_array(), other.to_array())


@dataclass(frozen=True)
class TangentVector:
    dr: NDArray = field(default_factory=lambda: np.zeros(3))
    dp: NDArray = field(default_factory=lambda: np.zeros(3))
    dv: NDArray = field(default_factory=lambda: np.zeros(3))
    db_w: NDArray = field(default_factory=lambda: np.zeros(3))
    db_a: NDArray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("dr", "dp", "dv", "db_w", "db_a"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))

    def to_array(self) -> NDArray:
        return np.concatenate([self.dr, self.dp, self.dv, self.db_w, self.db_a])

    @classmethod
    def from_array(cls, a: ArrayLike) -> "TangentVector":
        a = np.asarray(a, dtype=float).reshape(TANGENT_DIM)
        return cls(a[0:3], a[3:6], a[6:9], a[9:12], a[12:15])


@dataclass(frozen=True)
class ImuSample:
    t: int
    omega_m: NDArray
    accel_m: NDArray

    def __post_init__(self):
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "omega_m", _vec3(self.omega_m))
        object.__setattr__(self, "accel_m", _vec3(self.accel_m))


@dataclass(frozen=True)
class FeatureFrame:
    """Matched world/body feature coordinates observed at one camera epoch."""

    t: int
    ids: tuple
    f_w: NDArray
    f_b: NDArray

    def __post_init__(self):
        f_w = np.asarray(self.f_w, dtype=float).reshape(-1, 3)
        f_b = np.asarray(self.f_b, dtype=float).reshape(-1, 3)
        ids = tuple(int(i) for i in self.ids)
        if not (len(ids) == len(f_w) == len(f_b)):
            raise ValueError("feature frame lists must have equal length")
        if len(ids) == 0:
            raise EmptyFeatureSet("a feature frame needs at least one feature")
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "f_w", f_w)
        object.__setattr__(self, "f_b", f_b)

    @property
    def m_f(self) -> int:
        return len(self.ids)

    @property
    def z(self) -> NDArray:
        return self.f_b.reshape(-1)


def _cov3(c) -> NDArray:
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        c = np.diag(c)
    return c.reshape(3, 3).copy()


@dataclass(frozen=True)
class NoiseConfig:
    """IMU and feature noise model.

    ``C_w``/``C_a`` are the white-noise covariances of gyro and accelerometer
    readings, ``C_bw``/``C_ba`` the per-step bias random-walk covariances and
    ``c_f`` the per-axis standard deviation of a feature coordinate (m).
    1-D inputs are taken as diagonals.
    """

    C_w: NDArray
    C_a: NDArray
    C_bw: NDArray
    C_ba: NDArray
    c_f: float
    gravity: NDArray = field(default_factory=lambda: GRAVITY.copy())
    # treat C_bw/C_ba as per-second densities and scale them by dT
    bias_walk_per_second: bool = False

    def __post_init__(self):
        for name in ("C_w", "C_a", "C_bw", "C_ba"):
            c = _cov3(getattr(self, name))
            if np.max(np.abs(c - c.T)) > 1e-12 or np.linalg.eigvalsh(c)[0] < -1e-15:
                raise ValueError(f"{name} must be symmetric positive semidefinite")
            object.__setattr__(self, name, c)
        # zero is allowed for noise-free synthesis; the filters reject it
        if not float(self.c_f) >= 0.0:
            raise ValueError("c_f must be non-negative")
        object.__setattr__(self, "c_f", float(self.c_f))
        object.__setattr__(self, "gravity", _vec3(self.gravity))

    @classmethod
    def default(cls) -> "NoiseConfig":
        """Noise magnitudes used for the EuRoC V1_02_medium experiments."""
        return cls(
            C_w=1e-4 * np.array([0.1356, 0.0386, 0.0242]) ** 2,
            C_a=1e-4 * np.array([9.2501, 0.0293, 3.3677]) ** 2,
            C_bw=1e-8 * np.array([0.0147, 0.1051, 0.0930]) ** 2,
            C_ba=1e-8 * np.array([0.0022, 0.0208, 0.0758]) ** 2,
            c_f=0.099538,
        )

    @classmethod
    def zero(cls, c_f: float = 0.099538) -> "NoiseConfig":
        z = np.zeros(3)
        return cls(z, z, z, z, c_f)


def state_transition(
    x: NavState, u: ImuSample, n_x: ArrayLike | None, dt: float, gravity: ArrayLike = GRAVITY
) -> NavState:
    """Propagate one IMU interval with the sample held constant.

    ``q+ = q (x) q_r(omega dt)``, ``p+ = p + v dt + w dt^2 / 2`` and
    ``v+ = v + w dt`` with ``w = g + R(q) a``, where ``omega`` and ``a`` are
    the bias- and noise-corrected readings. Biases pass through unchanged.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    n_x = np.zeros(NOISE_DIM) if n_x is None else np.asarray(n_x, dtype=float).reshape(NOISE_DIM)
    X = x.to_array()
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(n_x))
            and np.all(np.isfinite(u.omega_m)) and np.all(np.isfinite(u.accel_m))):
        raise NonFiniteInput("state transition received non-finite input")
    out = backend.transition_batch(X[None, :], n_x[None, :], u.omega_m, u.accel_m, _vec3(gravity), float(dt))
    return NavState.from_array(out[0])


def measurement(x: NavState, f_w: ArrayLike) -> NDArray:
    """Stacked body-frame feature coordinates ``R(q)^T (f_w,i - p)``."""
    f_w = np.asarray(f_w, dtype=float).reshape(-1, 3)
    if f_w.shape[0] == 0:
        raise EmptyFeatureSet("measurement needs at least one feature")
    return backend.measurement_batch(x.to_array()[None, :], f_w)[0]


def _tangent(d) -> NDArray:
    if isinstance(d, TangentVector):
        return d.to_array()
    return np.asarray(d, dtype=float).reshape(TANGENT_DIM)


def state_oplus(x: NavState, d: TangentVector | ArrayLike) -> NavState:
    return NavState.from_array(backend.oplus_batch(x.to_array(), _tangent(d)[None, :])[0])


def state_ominus(x1: NavState, x2: NavState) -> TangentVector:
    return TangentVector.from_array(backend.ominus_batch(x1.to_array()[None, :], x2.to_array())[0])


def input_noise_matrix(cfg: NoiseConfig) -> NDArray:
    """6x6 covariance of the non-additive IMU noise ``[n_w, n_a]``."""
    C = np.zeros((NOISE_DIM, NOISE_DIM))
    C[:3, :3] = cfg.C_w
    C[3:, 3:] = cfg.C_a
    return C


def process_noise_matrix(cfg: NoiseConfig, dt: float | None = None) -> NDArray:
    """15x15 additive process noise: zeros except the two bias blocks."""
    Q = np.zeros((TANGENT_DIM, TANGENT_DIM))
    scale = dt if (cfg.bias_walk_per_second and dt is not None) else 1.0
    Q[9:12, 9:12] = scale * cfg.C_bw
    Q[12:15, 12:15] = scale * cfg.C_ba
    return Q


def measurement_noise_matrix(c_f: float, m_f: int) -> NDArray:
    if m_f < 1:
        raise EmptyFeatureSet("m_f must be at least 1")
    if not c_f > 0.0:
        raise ValueError("c_f must be positive")
    return (c_f * c_f) * np.eye(3 * m_f)
