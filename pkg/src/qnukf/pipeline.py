"""Stream an IMU/feature dataset through either filter, and build synthetic datasets."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from . import backend
from .config import RunConfig, SimConfig
from .dataio import Dataset, ensure_dir, write_diagnostics, write_json, write_run_output, write_states_csv
from .ekf import EKF
from .errors import NonMonotoneTime
from .filter import QNUKF
from .metrics import compute_metrics
from .model import FeatureFrame, ImuSample, NavState, NoiseConfig
from .sim import default_world, generate_truth, synthesize_features, synthesize_imu
from .unscented import UtParams

log = logging.getLogger(__name__)

FILTERS = ("qnukf", "ekf")


@dataclass
class RunResult:
    t: NDArray  # (n,) int64, one row per IMU sample
    states: NDArray  # (n, 16)
    trace_P: NDArray
    diagnostics: list
    n_predict: int
    n_update: int
    n_frames: int
    n_skipped_frames: int
    runtime_s: float
    step_latency_s: NDArray
    covariances: NDArray | None = field(default=None, repr=False)


def make_filter(name: str, x0: NavState, P0: NDArray, cfg: NoiseConfig, params: UtParams | None = None,
                t0: int = 0, floor: bool = False):
    if name == "qnukf":
        return QNUKF(x0, P0, cfg, params, t0, floor)
    if name == "ekf":
        return EKF(x0, P0, cfg, t0, floor)
    raise ValueError(f"unknown filter {name!r}; expected one of {FILTERS}")


def _intervals(imu: list[ImuSample], nominal_dt: float | None) -> list[float]:
    """Hold each sample until the next one; the last uses ``nominal_dt``."""
    dts = []
    for k in range(len(imu) - 1):
        d = imu[k + 1].t - imu[k].t
        if d <= 0:
            raise NonMonotoneTime(f"IMU timestamps not increasing at sample {k + 1}")
        dts.append(d * 1e-9)
    if imu:
        if nominal_dt is None:
            nominal_dt = dts[-1] if dts else None
        if nominal_dt is None or not nominal_dt > 0.0:
            raise ValueError("a single-sample stream needs a nominal dt")
        dts.append(float(nominal_dt))
    return dts


def run_filter(
    name: str,
    imu: list[ImuSample],
    frames: list[FeatureFrame],
    x0: NavState,
    P0: NDArray,
    cfg: NoiseConfig,
    params: UtParams | None = None,
    floor: bool = False,
    nominal_dt: float | None = None,
    keep_covariances: bool = False,
) -> RunResult:
    """Predict once per IMU sample, update whenever a frame falls inside the step.

    The filter starts at the first IMU timestamp. A frame stamped in
    ``(t_k, t_k + dT_k]`` corrects the prediction ending at ``t_k + dT_k``;
    when several frames share one interval only the newest is used.
    """
    if not imu:
        raise ValueError("empty IMU stream")
    dts = _intervals(imu, nominal_dt)
    flt = make_filter(name, x0, P0, cfg, params, imu[0].t, floor)
    n = len(imu)
    t = np.empty(n, dtype=np.int64)
    states = np.empty((n, 16))
    trace_P = np.empty(n)
    lat = np.empty(n)
    covs = np.empty((n, 15, 15)) if keep_covariances else None
    diagnostics = []
    skipped = 0
    j = 0
    while j < len(frames) and frames[j].t <= imu[0].t:
        j += 1
        skipped += 1
    start = time.perf_counter()
    for k, (u, dt) in enumerate(zip(imu, dts)):
        t_end = u.t + int(round(dt * 1e9))
        frame = None
        while j < len(frames) and frames[j].t <= t_end:
            if frame is not None:
                skipped += 1
            frame = frames[j]
            j += 1
        s0 = time.perf_counter()
        est = flt.step(u, dt, frame)
        lat[k] = time.perf_counter() - s0
        t[k] = est.t
        states[k] = est.x_hat.to_array()
        trace_P[k] = np.trace(est.P)
        if covs is not None:
            covs[k] = est.P
        info = est.info
        diagnostics.append((
            int(est.t),
            int(bool(info.get("updated", False))),
            int(info.get("m_z", 0)),
            float(info.get("innovation_norm", 0.0)),
            float(trace_P[k]),
            float(info.get("condition", 0.0)),
            int(bool(info.get("degenerate_mean", False))),
        ))
    runtime = time.perf_counter() - start
    skipped += len(frames) - j
    if skipped:
        log.warning("%d feature frame(s) were not used", skipped)
    log.info("%s: %d predictions, %d updates in %.3f s", name, flt.n_predict, flt.n_update, runtime)
    return RunResult(t, states, trace_P, diagnostics, flt.n_predict, flt.n_update, len(frames), skipped,
                     runtime, lat, covs)


def simulate_dataset(sim: SimConfig, seed: int | None = None) -> Dataset:
    """Truth, noisy IMU, world map and feature frames for one simulation."""
    spec = sim.trajectory if seed is None else replace(sim.trajectory, seed=int(seed))
    truth = generate_truth(spec, sim.noise.gravity)
    imu, truth = synthesize_imu(truth, sim.noise, spec.seed, sim.b0_w, sim.b0_a)
    world = default_world(spec.seed, sim.n_features, sim.box_min, sim.box_max)
    frames = synthesize_features(truth, world, sim.noise.c_f, spec, spec.seed, sim.features)
    meta = {
        "kind": spec.kind,
        "duration": spec.duration,
        "imu_rate": spec.imu_rate,
        "cam_rate": spec.cam_rate,
        "seed": spec.seed,
        "n_imu": len(imu),
        "n_frames": len(frames),
        "gravity": [float(g) for g in sim.noise.gravity],
        "frames_of_reference": "quaternions are Hamilton, scalar-first, body to world; f_b = R(q)^T (f_w - p)",
    }
    return Dataset(imu, frames, world, truth.t, truth.states, meta)


def run_dataset(ds: Dataset, name: str, cfg: RunConfig, keep_covariances: bool = False) -> RunResult:
    """Run one filter over a dataset with the initial state taken from ``cfg``."""
    if not ds.imu:
        raise ValueError("dataset has no IMU samples")
    row = None
    if cfg.init == "truth":
        if ds.truth is None:
            raise ValueError("init = truth needs a dataset with truth.csv")
        k = np.searchsorted(ds.truth_t, ds.imu[0].t)
        if k >= len(ds.truth_t) or ds.truth_t[k] != ds.imu[0].t:
            raise ValueError(f"no truth sample at the first IMU timestamp {ds.imu[0].t}")
        row = ds.truth[k]
    x0 = NavState.from_array(cfg.initial_state(row))
    return run_filter(name, ds.imu, ds.frames, x0, cfg.P0(), cfg.noise(), cfg.ut_params() if name == "qnukf" else None,
                      cfg.floor, ds.nominal_dt, keep_covariances)


def write_run(out, name: str, ds: Dataset, res: RunResult, with_metrics: bool = True) -> dict:
    """Write one run directory and return its summary.

    ``estimates.csv``, ``diagnostics.csv`` and ``summary.json`` are
    deterministic; wall-clock figures go to ``timing.json``. With truth
    available and ``with_metrics``, ``errors.csv`` and ``metrics.json`` are
    written as well.
    """
    out = Path(out)
    ensure_dir(out)
    write_states_csv(out / "estimates.csv", res.t, res.states)
    write_diagnostics(out / "diagnostics.csv", res.diagnostics)
    summary = {
        "filter": name,
        "n_imu": len(ds.imu),
        "n_frames": res.n_frames,
        "n_predict": res.n_predict,
        "n_update": res.n_update,
        "n_skipped_frames": res.n_skipped_frames,
    }
    if ds.truth is not None:
        m = compute_metrics(res.t, res.states, ds.truth_t, ds.truth)
        summary["max_p_err"] = float(np.max(np.linalg.norm(m.p_e, axis=1)))
        summary["max_r_err"] = float(np.max(np.linalg.norm(m.r_e, axis=1)))
        if with_metrics:
            write_run_output(out, m, res.trace_P)
            summary["metrics"] = m.summary()
    write_json(out / "summary.json", summary)
    write_json(out / "timing.json", {
        "backend": backend.NAME,
        "runtime_ms": res.runtime_s * 1e3,
        "mean_step_ms": float(np.mean(res.step_latency_s) * 1e3),
        "max_step_ms": float(np.max(res.step_latency_s) * 1e3),
    })
    return summary
