import numpy as np
import pytest

from qnukf import rotation as rot
from qnukf.errors import NonMonotoneTime
from qnukf.model import GRAVITY, FeatureFrame, ImuSample, NavState, NoiseConfig, measurement
from qnukf.pipeline import run_filter

STEP = 5_000_000
X0 = NavState([1.0, 0, 0, 0], [0.0, 0.0, 2.0])
F_W = np.array([[3.0, 0, 2], [0, 3.0, 2], [-3.0, 0, 2], [0, 0, 5.0]])
P0 = 1e-4 * np.eye(15)


def imu(n, t0=0):
    return [ImuSample(t0 + k * STEP, np.zeros(3), -GRAVITY) for k in range(n)]


def frame(t):
    return FeatureFrame(t, range(4), F_W, measurement(X0, F_W).reshape(-1, 3))


@pytest.mark.parametrize("name", ["qnukf", "ekf"])
def test_one_update_per_frame(name):
    samples = imu(100)
    frames = [frame(k * STEP) for k in range(10, 101, 10)]
    res = run_filter(name, samples, frames, X0, P0, NoiseConfig.default())
    assert (res.n_predict, res.n_update, res.n_skipped_frames) == (100, 10, 0)
    updated = [d[0] for d in res.diagnostics if d[1]]
    assert updated == [f.t for f in frames]
    assert res.t.tolist() == [(k + 1) * STEP for k in range(100)]


def test_frame_inside_interval_updates_at_interval_end():
    res = run_filter("qnukf", imu(5), [frame(2 * STEP + 1)], X0, P0, NoiseConfig.default())
    assert [d[1] for d in res.diagnostics] == [0, 0, 1, 0, 0]


def test_newest_frame_wins():
    frames = [frame(STEP + 1000), frame(2 * STEP)]
    res = run_filter("qnukf", imu(4), frames, X0, P0, NoiseConfig.default())
    assert (res.n_update, res.n_skipped_frames) == (1, 1)


def test_frames_outside_the_stream_are_skipped():
    frames = [frame(0), frame(50 * STEP)]
    res = run_filter("ekf", imu(4), frames, X0, P0, NoiseConfig.default())
    assert (res.n_update, res.n_skipped_frames, res.n_frames) == (0, 2, 2)


def test_last_sample_uses_nominal_interval():
    res = run_filter("qnukf", imu(1), [], X0, P0, NoiseConfig.default(), nominal_dt=0.01)
    assert res.t.tolist() == [10_000_000]
    with pytest.raises(ValueError):
        run_filter("qnukf", imu(1), [], X0, P0, NoiseConfig.default())


def test_non_monotone_stream():
    samples = imu(3)
    samples[2] = ImuSample(samples[1].t, np.zeros(3), -GRAVITY)
    with pytest.raises(NonMonotoneTime):
        run_filter("qnukf", samples, [], X0, P0, NoiseConfig.default())


def test_unknown_filter():
    with pytest.raises(ValueError):
        run_filter("pf", imu(2), [], X0, P0, NoiseConfig.default())


def test_covariances_kept_on_request():
    res = run_filter("qnukf", imu(20), [frame(10 * STEP)], X0, P0, NoiseConfig.default(), keep_covariances=True)
    assert res.covariances.shape == (20, 15, 15)
    np.testing.assert_allclose(np.trace(res.covariances, axis1=1, axis2=2), res.trace_P)
    assert run_filter("qnukf", imu(2), [], X0, P0, NoiseConfig.default()).covariances is None


def test_hover_stays_put():
    q = rot.rotvec_to_quat([0.05, -0.02, 0.3])
    x0 = NavState(q, [0.0, 0.0, 2.0])
    a = rot.quat_to_rot(q).T @ -GRAVITY
    samples = [ImuSample(k * STEP, np.zeros(3), a) for k in range(200)]
    frames = [FeatureFrame(t, range(4), F_W, measurement(x0, F_W).reshape(-1, 3))
              for t in range(10 * STEP, 201 * STEP, 10 * STEP)]
    for name in ("qnukf", "ekf"):
        res = run_filter(name, samples, frames, x0, P0, NoiseConfig.default())
        assert np.abs(res.states[:, 4:7] - x0.p).max() < 1e-3
