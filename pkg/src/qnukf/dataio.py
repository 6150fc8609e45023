"""CSV/JSON formats for datasets and run outputs.

Reals are written with Python's shortest round-trip ``repr`` so every file
reads back bit-exactly. State files use the EuRoC ground-truth column order::

    timestamp_ns,p_x,p_y,p_z,q_w,q_x,q_y,q_z,v_x,v_y,v_z,bw_x,bw_y,bw_z,ba_x,ba_y,ba_z

with Hamilton, scalar-first, body-to-world quaternions.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import IoError, NonMonotoneTime, ParseError, UnknownFeatureId
from .metrics import Metrics
from .model import FeatureFrame, ImuSample
from .sim import WorldMap

IMU_HEADER = ("timestamp_ns", "w_x", "w_y", "w_z", "a_x", "a_y", "a_z")
MAP_HEADER = ("id", "x", "y", "z")
OBS_HEADER = ("timestamp_ns", "id", "fb_x", "fb_y", "fb_z")
STATE_HEADER = ("timestamp_ns", "p_x", "p_y", "p_z", "q_w", "q_x", "q_y", "q_z", "v_x", "v_y", "v_z",
                "bw_x", "bw_y", "bw_z", "ba_x", "ba_y", "ba_z")
ERROR_HEADER = ("timestamp_ns", "r_x", "r_y", "r_z", "p_x", "p_y", "p_z", "v_x", "v_y", "v_z",
                "r_norm", "p_norm", "v_norm", "trace_P")
DIAG_HEADER = ("timestamp_ns", "updated", "m_z", "innovation_norm", "trace_P", "condition", "degenerate_mean")

UNIT_TOL = 1e-6


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _row(values) -> str:
    return ",".join(fmt(v) for v in values) + "\n"


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _write_csv(path, header, rows) -> None:
    _write_text(path, ",".join(header) + "\n" + "".join(_row(r) for r in rows))


def write_json(path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno) from exc


def _records(path, ncols: int, kinds: str):
    """Yield ``(line_no, values)``; ``kinds`` holds 'i' or 'f' per column.

    A first line whose leading field is not an integer is taken as a header.
    Blank lines are skipped.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        for line_no, fields in enumerate(csv.reader(fh), start=1):
            if not fields or all(not f.strip() for f in fields):
                continue
            if line_no == 1:
                try:
                    int(fields[0])
                except ValueError:
                    continue
            if len(fields) != ncols:
                raise ParseError(f"expected {ncols} fields, found {len(fields)}", path, line_no)
            try:
                vals = [int(f) if k == "i" else float(f) for f, k in zip(fields, kinds)]
            except ValueError as exc:
                raise ParseError(str(exc), path, line_no) from exc
            yield line_no, vals


def read_imu_csv(path) -> list[ImuSample]:
    out = []
    last = None
    for line_no, v in _records(path, 7, "iffffff"):
        if last is not None and v[0] <= last:
            raise NonMonotoneTime(f"{path}:{line_no}: timestamp {v[0]} does not follow {last}")
        if not np.all(np.isfinite(v[1:])):
            raise ParseError("non-finite IMU reading", path, line_no)
        last = v[0]
        out.append(ImuSample(v[0], v[1:4], v[4:7]))
    return out


def write_imu_csv(path, imu: list[ImuSample]) -> None:
    _write_csv(path, IMU_HEADER, ([u.t, *u.omega_m, *u.accel_m] for u in imu))


def read_world_map(path) -> WorldMap:
    ids, pos = [], []
    seen = set()
    for line_no, v in _records(path, 4, "ifff"):
        if v[0] in seen:
            raise ParseError(f"duplicate feature id {v[0]}", path, line_no)
        seen.add(v[0])
        ids.append(v[0])
        pos.append(v[1:])
    try:
        return WorldMap(np.array(ids, dtype=np.int64), np.array(pos, dtype=float).reshape(-1, 3))
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def write_world_map(path, world: WorldMap) -> None:
    _write_csv(path, MAP_HEADER, ([int(i), *p] for i, p in zip(world.ids, world.positions)))


def read_feature_frames(path_map, path_obs) -> tuple[WorldMap, list[FeatureFrame]]:
    """Load the map and group observations sharing a timestamp into frames."""
    world = read_world_map(path_map)
    index = {int(i): k for k, i in enumerate(world.ids)}
    groups: list[tuple[int, list, list]] = []
    for line_no, v in _records(path_obs, 5, "iifff"):
        t, fid = v[0], v[1]
        if fid not in index:
            raise UnknownFeatureId(f"{path_obs}:{line_no}: feature id {fid} is not in the map")
        if groups and t < groups[-1][0]:
            raise NonMonotoneTime(f"{path_obs}:{line_no}: timestamp {t} precedes {groups[-1][0]}")
        if not groups or t != groups[-1][0]:
            groups.append((t, [], []))
        groups[-1][1].append(fid)
        groups[-1][2].append(v[2:])
    frames = [FeatureFrame(t, ids, world.positions[[index[i] for i in ids]], fb) for t, ids, fb in groups]
    return world, frames


def write_feature_obs(path, frames: list[FeatureFrame]) -> None:
    rows = ([f.t, i, *b] for f in frames for i, b in zip(f.ids, f.f_b))
    _write_csv(path, OBS_HEADER, rows)


def _to_euroc(states: NDArray) -> NDArray:
    return np.hstack([states[:, 4:7], states[:, 0:4], states[:, 7:16]])


def write_states_csv(path, t: NDArray, states: NDArray) -> None:
    X = _to_euroc(np.asarray(states, dtype=float).reshape(-1, 16))
    _write_csv(path, STATE_HEADER, ([int(tk), *x] for tk, x in zip(t, X)))


def read_states_csv(path) -> tuple[NDArray, NDArray]:
    """Return ``(t, states)`` with states in the internal ``[q, p, v, b_w, b_a]`` order."""
    t, rows = [], []
    last = None
    for line_no, v in _records(path, 17, "i" + "f" * 16):
        q = np.array(v[4:8])
        if abs(np.linalg.norm(q) - 1.0) > UNIT_TOL:
            raise ParseError(f"quaternion norm {np.linalg.norm(q):.9g} is not 1", path, line_no)
        if last is not None and v[0] <= last:
            raise NonMonotoneTime(f"{path}:{line_no}: timestamp {v[0]} does not follow {last}")
        last = v[0]
        t.append(v[0])
        rows.append(v[4:8] + v[1:4] + v[8:17])
    return np.array(t, dtype=np.int64), np.array(rows, dtype=float).reshape(-1, 16)


def write_diagnostics(path, rows) -> None:
    _write_csv(path, DIAG_HEADER, rows)


def read_diagnostics(path) -> list[tuple]:
    return [tuple(v) for _, v in _records(path, 7, "iiifffi")]


def write_run_output(path, metrics: Metrics, trace_P: NDArray | None = None) -> None:
    """Write ``errors.csv`` (per-step, plot-ready) and ``metrics.json``."""
    path = Path(path)
    ensure_dir(path)
    tr = np.full(metrics.steps, np.nan) if trace_P is None else np.asarray(trace_P, dtype=float)
    norms = [np.linalg.norm(a, axis=1) for a in (metrics.r_e, metrics.p_e, metrics.v_e)]
    rows = zip(metrics.t, metrics.r_e, metrics.p_e, metrics.v_e, *norms, tr)
    _write_csv(path / "errors.csv", ERROR_HEADER,
               ([int(t), *r, *p, *v, rn, pn, vn, c] for t, r, p, v, rn, pn, vn, c in rows))
    write_json(path / "metrics.json", metrics.summary())


def ensure_dir(path: Path) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {path}: {exc}") from exc


@dataclass
class Dataset:
    imu: list
    frames: list
    world: WorldMap
    truth_t: NDArray | None = None
    truth: NDArray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def nominal_dt(self) -> float | None:
        rate = self.meta.get("imu_rate")
        return 1.0 / float(rate) if rate else None


def write_dataset(path, ds: Dataset) -> None:
    path = Path(path)
    ensure_dir(path)
    write_imu_csv(path / "imu.csv", ds.imu)
    write_world_map(path / "features_map.csv", ds.world)
    write_feature_obs(path / "features_obs.csv", ds.frames)
    if ds.truth is not None:
        write_states_csv(path / "truth.csv", ds.truth_t, ds.truth)
    write_json(path / "meta.json", ds.meta)


def read_dataset(path) -> Dataset:
    path = Path(path)
    if not path.is_dir():
        raise IoError(f"dataset directory {path} does not exist")
    imu = read_imu_csv(path / "imu.csv")
    world, frames = read_feature_frames(path / "features_map.csv", path / "features_obs.csv")
    truth_t = truth = None
    if (path / "truth.csv").exists():
        truth_t, truth = read_states_csv(path / "truth.csv")
    meta = read_json(path / "meta.json") if (path / "meta.json").exists() else {}
    return Dataset(imu, frames, world, truth_t, truth, meta)
