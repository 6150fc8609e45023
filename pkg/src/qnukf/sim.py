"""Synthetic trajectories, IMU streams and feature frames.

Truth lives on the IMU clock ``t_k = k * dT`` for ``k = 0..N`` where
``N = duration * imu_rate``. The IMU sample ``k`` is held over
``[t_k, t_{k+1}]`` and is chosen so that the closed-form transition maps
truth ``k`` exactly onto truth ``k + 1``; a noise-free stream therefore
re-integrates to the truth up to rounding.

Noise draws come from a Philox generator keyed by ``(seed, stream)`` with the
sample index in the counter, so every draw depends only on where it sits in
the stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import rotation as rot
from .model import GRAVITY, FeatureFrame, ImuSample, NavState, NoiseConfig

KINDS = ("circle", "lissajous", "hover")

STREAM_WORLD = 1
STREAM_IMU = 2
STREAM_BIAS = 3
STREAM_FEATURES = 4

MIN_FEATURES = 3


@dataclass(frozen=True)
class TrajectorySpec:
    """Analytic trajectory description.

    ``center`` and ``tilt`` (peak roll/pitch wobble in rad) extend the basic
    fields; ``amplitude`` is ignored for hover.
    """

    kind: str = "circle"
    amplitude: tuple = (2.0, 2.0, 0.0)
    angular_rate: float = 0.5
    yaw_rate: float = 0.0
    duration: float = 10.0
    imu_rate: float = 200.0
    cam_rate: float = 20.0
    seed: int = 0
    center: tuple = (0.0, 0.0, 2.0)
    tilt: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "amplitude", tuple(float(a) for a in np.reshape(self.amplitude, 3)))
        object.__setattr__(self, "center", tuple(float(a) for a in np.reshape(self.center, 3)))
        if not self.duration > 0.0:
            raise ValueError("duration must be positive")
        if not (self.imu_rate > 0.0 and self.cam_rate > 0.0):
            raise ValueError("sensor rates must be positive")
        ratio = self.imu_rate / self.cam_rate
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("imu_rate must be an integer multiple of cam_rate")
        if abs(1e9 / self.imu_rate - round(1e9 / self.imu_rate)) > 1e-6:
            raise ValueError("the IMU period must be a whole number of nanoseconds")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def period_ns(self) -> int:
        return int(round(1e9 / self.imu_rate))

    @property
    def dt(self) -> float:
        return self.period_ns * 1e-9

    @property
    def n_steps(self) -> int:
        return int(round(self.duration * self.imu_rate))

    @property
    def frame_stride(self) -> int:
        return int(round(self.imu_rate / self.cam_rate))


@dataclass(frozen=True)
class WorldMap:
    ids: NDArray
    positions: NDArray
    box_min: NDArray = field(default_factory=lambda: np.array([-5.0, -5.0, 0.0]))
    box_max: NDArray = field(default_factory=lambda: np.array([5.0, 5.0, 4.0]))

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if len(ids) != len(pos):
            raise ValueError("ids and positions differ in length")
        if len(np.unique(ids)) != len(ids):
            raise ValueError("feature ids must be unique")
        if len(ids) < MIN_FEATURES:
            raise ValueError(f"a world needs at least {MIN_FEATURES} features")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "box_min", np.asarray(self.box_min, dtype=float).reshape(3))
        object.__setattr__(self, "box_max", np.asarray(self.box_max, dtype=float).reshape(3))

    @property
    def count(self) -> int:
        return len(self.ids)

    def lookup(self, ids) -> NDArray:
        index = {int(i): k for k, i in enumerate(self.ids)}
        return self.positions[[index[int(i)] for i in ids]]


@dataclass(frozen=True)
class FeatureConfig:
    visibility_radius: float = 8.0
    cap: int = 30
    min_features: int = MIN_FEATURES


@dataclass(frozen=True)
class TruthSeries:
    """``N + 1`` truth rows plus the ``N`` noise-free IMU inputs."""

    t: NDArray  # (N+1,) int64 ns
    states: NDArray  # (N+1, 16)
    omega: NDArray  # (N, 3)
    accel: NDArray  # (N, 3)

    def state(self, k: int) -> NavState:
        return NavState.from_array(self.states[k])

    def __len__(self) -> int:
        return len(self.t)


def philox(seed: int, stream: int, index: int) -> np.random.Generator:
    """Generator for one ``(seed, stream, index)`` cell."""
    bits = np.random.Philox(key=[int(seed) % 2**64, int(stream)], counter=[0, int(index), 0, 0])
    return np.random.Generator(bits)


def _sqrt_cov(C: NDArray) -> NDArray:
    evals, evecs = np.linalg.eigh(C)
    return evecs * np.sqrt(np.clip(evals, 0.0, None))


def default_world(seed: int, n: int = 60, box_min=(-5.0, -5.0, 0.0), box_max=(5.0, 5.0, 4.0)) -> WorldMap:
    lo = np.asarray(box_min, dtype=float)
    hi = np.asarray(box_max, dtype=float)
    u = philox(seed, STREAM_WORLD, 0).random((n, 3))
    return WorldMap(np.arange(n), lo + u * (hi - lo), lo, hi)


def _position(spec: TrajectorySpec, t: NDArray) -> tuple[NDArray, NDArray]:
    c = np.asarray(spec.center)
    A = np.asarray(spec.amplitude)
    w = spec.angular_rate
    t = t[:, None]
    if spec.kind == "hover":
        return np.broadcast_to(c, (len(t), 3)).copy(), np.zeros((len(t), 3))
    if spec.kind == "circle":
        p = c + A * np.hstack([np.cos(w * t), np.sin(w * t), np.sin(w * t)])
        v = A * w * np.hstack([-np.sin(w * t), np.cos(w * t), np.cos(w * t)])
        return p, v
    k = np.array([1.0, 2.0, 3.0])
    return c + A * np.sin(k * w * t), A * k * w * np.cos(k * w * t)


def _attitude(spec: TrajectorySpec, t: NDArray) -> NDArray:
    w = spec.angular_rate
    yaw = spec.yaw_rate * t
    roll = spec.tilt * np.sin(w * t)
    pitch = spec.tilt * np.sin(0.5 * w * t)
    qz = rot.rotvec_to_quat(np.stack([0 * t, 0 * t, yaw], axis=-1))
    qy = rot.rotvec_to_quat(np.stack([0 * t, pitch, 0 * t], axis=-1))
    qx = rot.rotvec_to_quat(np.stack([roll, 0 * t, 0 * t], axis=-1))
    return rot.canonicalize(rot.qmul(rot.qmul(qz, qy), qx))


def generate_truth(spec: TrajectorySpec, gravity: ArrayLike = GRAVITY) -> TruthSeries:
    """Sample the analytic trajectory and derive discrete-consistent IMU inputs.

    ``omega_k = log(q_k^-1 q_{k+1}) / dT`` and ``a_k = R(q_k)^T (w_k - g)``
    with ``w_k = (v_{k+1} - v_k) / dT``; position is then propagated with the
    same held-input recursion the filter uses.
    """
    g = np.asarray(gravity, dtype=float).reshape(3)
    N = spec.n_steps
    dt = spec.dt
    t_ns = np.arange(N + 1, dtype=np.int64) * spec.period_ns
    t = t_ns * 1e-9
    p_an, v = _position(spec, t)
    q_an = _attitude(spec, t)

    dq = rot.qmul(rot.qinv(q_an[:-1]), q_an[1:])
    omega = rot.quat_to_rotvec(dq) / dt
    wk = (v[1:] - v[:-1]) / dt
    accel = np.einsum("nji,nj->ni", rot.quat_to_rot(q_an[:-1]), wk - g)

    states = np.zeros((N + 1, 16))
    states[0, 0:4] = q_an[0]
    states[0, 4:7] = p_an[0]
    states[0, 7:10] = v[0]
    for k in range(N):
        q = states[k, 0:4]
        w = g + rot.quat_to_rot(q) @ accel[k]
        states[k + 1, 0:4] = rot.qmul(q, rot.rotvec_to_quat(omega[k] * dt))
        states[k + 1, 4:7] = states[k, 4:7] + states[k, 7:10] * dt + 0.5 * w * dt * dt
        states[k + 1, 7:10] = states[k, 7:10] + w * dt
    return TruthSeries(t_ns, states, omega, accel)


def synthesize_imu(
    truth: TruthSeries,
    cfg: NoiseConfig,
    seed: int,
    b0_w: ArrayLike = (0.0, 0.0, 0.0),
    b0_a: ArrayLike = (0.0, 0.0, 0.0),
) -> tuple[list[ImuSample], TruthSeries]:
    """Corrupt the truth inputs with random-walk biases and white noise.

    Returns the IMU stream and a copy of ``truth`` whose bias columns hold the
    bias actually applied at each step.
    """
    N = len(truth.omega)
    dt = (truth.t[1] - truth.t[0]) * 1e-9 if N else 0.0
    scale = dt if cfg.bias_walk_per_second else 1.0
    L_w, L_a = _sqrt_cov(cfg.C_w), _sqrt_cov(cfg.C_a)
    L_bw, L_ba = _sqrt_cov(scale * cfg.C_bw), _sqrt_cov(scale * cfg.C_ba)
    b = np.zeros((N + 1, 6))
    b[0, :3] = np.asarray(b0_w, dtype=float)
    b[0, 3:] = np.asarray(b0_a, dtype=float)
    samples = []
    for k in range(N):
        e = philox(seed, STREAM_IMU, k).standard_normal(6)
        eb = philox(seed, STREAM_BIAS, k).standard_normal(6)
        om = truth.omega[k] + b[k, :3] + L_w @ e[:3]
        ac = truth.accel[k] + b[k, 3:] + L_a @ e[3:]
        samples.append(ImuSample(int(truth.t[k]), om, ac))
        b[k + 1, :3] = b[k, :3] + L_bw @ eb[:3]
        b[k + 1, 3:] = b[k, 3:] + L_ba @ eb[3:]
    states = truth.states.copy()
    states[:, 10:16] = b
    return samples, TruthSeries(truth.t, states, truth.omega, truth.accel)


def synthesize_features(
    truth: TruthSeries,
    world: WorldMap,
    c_f: float,
    spec: TrajectorySpec,
    seed: int,
    feat: FeatureConfig = FeatureConfig(),
) -> list[FeatureFrame]:
    """Feature frames at every ``imu_rate / cam_rate``-th truth sample after the first.

    Visible features are those within ``visibility_radius`` of the body; the
    ``cap`` nearest are kept (ties broken by id) and the frame is dropped when
    fewer than ``min_features`` remain.
    """
    frames = []
    for k in range(spec.frame_stride, len(truth), spec.frame_stride):
        x = truth.states[k]
        d = world.positions - x[4:7]
        dist = np.linalg.norm(d, axis=1)
        vis = np.flatnonzero(dist <= feat.visibility_radius)
        vis = vis[np.lexsort((world.ids[vis], dist[vis]))][: feat.cap]
        if len(vis) < feat.min_features:
            continue
        vis = vis[np.argsort(world.ids[vis], kind="stable")]
        f_b = d[vis] @ rot.quat_to_rot(x[0:4])
        if c_f > 0.0:
            f_b = f_b + c_f * philox(seed, STREAM_FEATURES, k).standard_normal(f_b.shape)
        frames.append(FeatureFrame(int(truth.t[k]), world.ids[vis], world.positions[vis], f_b))
    return frames
