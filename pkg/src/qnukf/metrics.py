"""Estimation error metrics: per-step errors, RMSE and steady-state RMSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import rotation as rot
from .errors import MisalignedSeries

SS_WINDOW_S = 20.0


@dataclass(frozen=True)
class Metrics:
    rmse: float
    ssrmse: float
    steps: int
    ssrmse_full_run: bool
    t: NDArray
    r_e: NDArray
    p_e: NDArray
    v_e: NDArray

    @property
    def e(self) -> NDArray:
        """Combined error ``||r_e|| + ||p_e|| + ||v_e||`` per step."""
        return (np.linalg.norm(self.r_e, axis=1) + np.linalg.norm(self.p_e, axis=1)
                + np.linalg.norm(self.v_e, axis=1))

    def summary(self) -> dict:
        return {"rmse": self.rmse, "ssrmse": self.ssrmse, "steps": self.steps,
                "ssrmse_full_run": self.ssrmse_full_run}


def align(est_t: ArrayLike, truth_t: ArrayLike) -> NDArray:
    """Indices into ``truth_t`` for every estimate timestamp (exact match)."""
    est_t = np.asarray(est_t, dtype=np.int64)
    truth_t = np.asarray(truth_t, dtype=np.int64)
    if len(est_t) == 0:
        raise MisalignedSeries("no estimates to evaluate")
    if np.any(np.diff(truth_t) <= 0) or np.any(np.diff(est_t) <= 0):
        raise MisalignedSeries("timestamps must be strictly increasing")
    idx = np.searchsorted(truth_t, est_t)
    ok = (idx < len(truth_t)) & (truth_t[np.minimum(idx, len(truth_t) - 1)] == est_t)
    if not np.all(ok):
        bad = int(est_t[np.argmin(ok)])
        raise MisalignedSeries(f"estimate at {bad} ns has no truth sample")
    return idx


def compute_metrics(
    est_t: ArrayLike,
    est_states: ArrayLike,
    truth_t: ArrayLike,
    truth_states: ArrayLike,
    window_s: float = SS_WINDOW_S,
) -> Metrics:
    """Errors ``r_e = q (-) q_hat``, ``p_e = p - p_hat``, ``v_e = v - v_hat``.

    The RMSE runs over every estimate; the steady-state RMSE over estimates
    stamped within ``window_s`` of the last one. Runs shorter than the window
    use all steps and set ``ssrmse_full_run``.
    """
    est_t = np.asarray(est_t, dtype=np.int64)
    X = np.asarray(est_states, dtype=float).reshape(-1, 16)
    T = np.asarray(truth_states, dtype=float).reshape(-1, 16)
    if len(X) != len(est_t) or len(T) != len(truth_t):
        raise MisalignedSeries("timestamp and state counts differ")
    T = T[align(est_t, truth_t)]
    r_e = rot.ominus_qq(T[:, 0:4], X[:, 0:4])
    p_e = T[:, 4:7] - X[:, 4:7]
    v_e = T[:, 7:10] - X[:, 7:10]
    e = np.linalg.norm(r_e, axis=1) + np.linalg.norm(p_e, axis=1) + np.linalg.norm(v_e, axis=1)
    rmse = float(np.sqrt(np.mean(e * e)))
    window_ns = int(round(window_s * 1e9))
    full = bool(est_t[-1] - est_t[0] < window_ns)
    tail = e if full else e[est_t >= est_t[-1] - window_ns]
    ssrmse = float(np.sqrt(np.mean(tail * tail)))
    return Metrics(rmse, ssrmse, int(len(e)), full, est_t, r_e, p_e, v_e)
