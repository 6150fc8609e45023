"""Flat ``key = value`` configuration files for runs and simulations.

One assignment per line, ``#`` starts a comment, vectors are whitespace
separated numbers and booleans are ``true``/``false``. Unknown keys and
duplicated keys are errors. :func:`dump_run_config` writes every key, so
``parse(dump(c)) == c`` holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from . import rotation as rot
from .errors import IoError, ParseError
from .model import GRAVITY, NoiseConfig
from .sim import FeatureConfig, TrajectorySpec
from .unscented import UtParams

_REF = NoiseConfig.default()


def _diag(C) -> tuple:
    return tuple(float(c) for c in np.diag(C))


@dataclass(frozen=True)
class RunConfig:
    C_w: tuple = _diag(_REF.C_w)
    C_a: tuple = _diag(_REF.C_a)
    C_bw: tuple = _diag(_REF.C_bw)
    C_ba: tuple = _diag(_REF.C_ba)
    c_f: float = _REF.c_f
    gravity: tuple = tuple(GRAVITY.tolist())
    bias_walk_per_second: bool = False
    ut_lambda: float = 3.0 - 21
    ut_alpha: float = 1e-4
    ut_beta: float = 2.0
    # "truth": start from the first truth row perturbed by the offsets below
    init: str = "truth"
    init_rot_offset: tuple = (0.0, 0.0, 0.0)
    init_pos_offset: tuple = (0.0, 0.0, 0.0)
    init_vel_offset: tuple = (0.0, 0.0, 0.0)
    init_q: tuple = (1.0, 0.0, 0.0, 0.0)
    init_p: tuple = (0.0, 0.0, 0.0)
    init_v: tuple = (0.0, 0.0, 0.0)
    init_bw: tuple = (0.0, 0.0, 0.0)
    init_ba: tuple = (0.0, 0.0, 0.0)
    P0_diag: tuple = (80.0,) * 3 + (10.0,) * 3 + (70.0,) * 3 + (10.0,) * 6
    floor: bool = False
    dataset: str = ""
    out: str = ""

    _vectors = {"C_w": 3, "C_a": 3, "C_bw": 3, "C_ba": 3, "gravity": 3, "init_rot_offset": 3,
                "init_pos_offset": 3, "init_vel_offset": 3, "init_q": 4, "init_p": 3, "init_v": 3,
                "init_bw": 3, "init_ba": 3, "P0_diag": 15}

    def __post_init__(self):
        if self.init not in ("truth", "explicit"):
            raise ValueError("init must be 'truth' or 'explicit'")
        for name, n in self._vectors.items():
            v = tuple(float(x) for x in np.reshape(getattr(self, name), -1))
            if len(v) != n:
                raise ValueError(f"{name} needs {n} values, got {len(v)}")
            object.__setattr__(self, name, v)
        if min(self.P0_diag) < 0.0:
            raise ValueError("P0_diag entries must be non-negative")

    def noise(self) -> NoiseConfig:
        return NoiseConfig(np.array(self.C_w), np.array(self.C_a), np.array(self.C_bw), np.array(self.C_ba),
                           self.c_f, np.array(self.gravity), self.bias_walk_per_second)

    def ut_params(self) -> UtParams:
        return UtParams(self.ut_lambda, self.ut_alpha, self.ut_beta, 21)

    def P0(self) -> np.ndarray:
        return np.diag(self.P0_diag)

    def initial_state(self, truth_row: np.ndarray | None = None) -> np.ndarray:
        """16-entry initial estimate."""
        if self.init == "explicit":
            return np.concatenate([rot.normalize(self.init_q), self.init_p, self.init_v, self.init_bw, self.init_ba])
        if truth_row is None:
            raise ValueError("init = truth needs a dataset with truth.csv")
        x = np.array(truth_row, dtype=float)
        x[0:4] = rot.oplus(x[0:4], self.init_rot_offset)
        x[4:7] += self.init_pos_offset
        x[7:10] += self.init_vel_offset
        return x


@dataclass(frozen=True)
class SimConfig:
    """Everything ``simulate`` needs: trajectory, sensor noise and world."""

    trajectory: TrajectorySpec = TrajectorySpec()
    noise: NoiseConfig = NoiseConfig.default()
    b0_w: tuple = (0.0, 0.0, 0.0)
    b0_a: tuple = (0.0, 0.0, 0.0)
    n_features: int = 60
    box_min: tuple = (-5.0, -5.0, 0.0)
    box_max: tuple = (5.0, 5.0, 4.0)
    features: FeatureConfig = FeatureConfig()


def _parse_lines(text: str, path=None) -> dict:
    out: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", path, line_no)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ParseError(f"duplicate key {key!r}", path, line_no)
        out[key] = (value, line_no)
    return out


def _convert(key: str, value: str, kind: str, path, line_no):
    try:
        if kind == "b":
            if value.lower() not in ("true", "false"):
                raise ValueError(f"expected true or false, got {value!r}")
            return value.lower() == "true"
        if kind == "i":
            return int(value)
        if kind == "f":
            return float(value)
        if kind == "v":
            return tuple(float(x) for x in value.split())
        return value
    except ValueError as exc:
        raise ParseError(f"{key}: {exc}", path, line_no) from exc


def _kind(default) -> str:
    """f float, i int, b bool, v float vector, s string."""
    if isinstance(default, bool):
        return "b"
    if isinstance(default, int):
        return "i"
    if isinstance(default, float):
        return "f"
    if isinstance(default, tuple):
        return "v"
    return "s"


def _read_text(path) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def parse_run_config(text: str, path=None) -> RunConfig:
    defaults = RunConfig()
    known = {f.name: _kind(getattr(defaults, f.name)) for f in fields(RunConfig)}
    kv = {}
    for key, (value, line_no) in _parse_lines(text, path).items():
        if key not in known:
            raise ParseError(f"unknown key {key!r}", path, line_no)
        kv[key] = _convert(key, value, known[key], path, line_no)
    try:
        return replace(defaults, **kv)
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def load_run_config(path) -> RunConfig:
    return parse_run_config(_read_text(path), path)


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return " ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_run_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_fmt_value(getattr(cfg, f.name))}\n" for f in fields(RunConfig))


_SIM_KEYS = {
    "kind": "s", "amplitude": "v", "angular_rate": "f", "yaw_rate": "f", "duration": "f",
    "imu_rate": "f", "cam_rate": "f", "seed": "i", "center": "v", "tilt": "f",
    "C_w": "v", "C_a": "v", "C_bw": "v", "C_ba": "v", "c_f": "f", "gravity": "v",
    "bias_walk_per_second": "b", "b0_w": "v", "b0_a": "v", "n_features": "i", "box_min": "v",
    "box_max": "v", "visibility_radius": "f", "cap": "i", "min_features": "i",
}
_TRAJ = ("kind", "amplitude", "angular_rate", "yaw_rate", "duration", "imu_rate", "cam_rate", "seed",
         "center", "tilt")
_NOISE = ("C_w", "C_a", "C_bw", "C_ba", "c_f", "gravity", "bias_walk_per_second")
_FEAT = ("visibility_radius", "cap", "min_features")


def parse_sim_config(text: str, path=None) -> SimConfig:
    kv = {}
    for key, (value, line_no) in _parse_lines(text, path).items():
        if key not in _SIM_KEYS:
            raise ParseError(f"unknown key {key!r}", path, line_no)
        kv[key] = _convert(key, value, _SIM_KEYS[key], path, line_no)
    base = SimConfig()
    try:
        traj = replace(base.trajectory, **{k: kv[k] for k in _TRAJ if k in kv})
        noise = replace(base.noise, **{k: np.array(kv[k]) if isinstance(kv[k], tuple) else kv[k]
                                       for k in _NOISE if k in kv})
        feat = replace(base.features, **{k: kv[k] for k in _FEAT if k in kv})
        rest = {k: kv[k] for k in ("b0_w", "b0_a", "n_features", "box_min", "box_max") if k in kv}
        return replace(base, trajectory=traj, noise=noise, features=feat, **rest)
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc), path) from exc


def load_sim_config(path) -> SimConfig:
    return parse_sim_config(_read_text(path), path)
