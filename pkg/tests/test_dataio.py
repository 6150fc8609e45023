import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnukf import dataio
from qnukf.dataio import (
    Dataset,
    read_dataset,
    read_diagnostics,
    read_feature_frames,
    read_imu_csv,
    read_states_csv,
    read_world_map,
    write_dataset,
    write_diagnostics,
    write_feature_obs,
    write_imu_csv,
    write_run_output,
    write_states_csv,
    write_world_map,
)
from qnukf.errors import IoError, NonMonotoneTime, ParseError, UnknownFeatureId
from qnukf.metrics import compute_metrics
from qnukf.model import FeatureFrame, ImuSample
from qnukf.sim import WorldMap

reals = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_empty_imu_file(tmp_path):
    (tmp_path / "imu.csv").write_text("")
    assert read_imu_csv(tmp_path / "imu.csv") == []


def test_imu_row_mapping(tmp_path):
    p = tmp_path / "imu.csv"
    p.write_text("timestamp_ns,w_x,w_y,w_z,a_x,a_y,a_z\n5000000,0,0,0,0,0,9.81\n")
    (u,) = read_imu_csv(p)
    assert u.t == 5_000_000
    np.testing.assert_array_equal(u.accel_m, [0, 0, 9.81])


def test_imu_headerless_and_blank_lines(tmp_path):
    p = tmp_path / "imu.csv"
    p.write_text("1,0,0,0,0,0,0\n\n2,0,0,0,0,0,0\n")
    assert [u.t for u in read_imu_csv(p)] == [1, 2]


def test_imu_shuffled_timestamps(tmp_path):
    p = tmp_path / "imu.csv"
    p.write_text("t,a,b,c,d,e,f\n10,0,0,0,0,0,0\n30,0,0,0,0,0,0\n20,0,0,0,0,0,0\n")
    with pytest.raises(NonMonotoneTime, match=":4:"):
        read_imu_csv(p)


def test_imu_truncated_row(tmp_path):
    p = tmp_path / "imu.csv"
    p.write_text("10,0,0,0,0,0,0\n20,0,0,0\n")
    with pytest.raises(ParseError, match="imu.csv:2: expected 7 fields"):
        read_imu_csv(p)


def test_imu_bad_number(tmp_path):
    p = tmp_path / "imu.csv"
    p.write_text("10,0,0,x,0,0,0\n")
    with pytest.raises(ParseError) as info:
        read_imu_csv(p)
    assert info.value.line == 1


def test_missing_file(tmp_path):
    with pytest.raises(IoError):
        read_imu_csv(tmp_path / "nope.csv")


@given(st.lists(st.tuples(reals, reals, reals, reals, reals, reals), min_size=1, max_size=20))
def test_imu_round_trip(tmp_path_factory, rows):
    p = tmp_path_factory.mktemp("imu") / "imu.csv"
    imu = [ImuSample(1000 * (k + 1), r[:3], r[3:]) for k, r in enumerate(rows)]
    write_imu_csv(p, imu)
    back = read_imu_csv(p)
    for a, b in zip(imu, back):
        assert a.t == b.t
        assert a.omega_m.tobytes() == b.omega_m.tobytes()
        assert a.accel_m.tobytes() == b.accel_m.tobytes()


def _world():
    return WorldMap([3, 5, 9], [[0.1, 0.2, 0.3], [1.0, -1.0, 2.0], [1 / 3, 2 / 7, -5.5e-17]])


def test_feature_grouping(tmp_path):
    write_world_map(tmp_path / "map.csv", _world())
    (tmp_path / "obs.csv").write_text("timestamp_ns,id,fb_x,fb_y,fb_z\n100,3,1,2,3\n100,9,4,5,6\n200,5,7,8,9\n")
    world, frames = read_feature_frames(tmp_path / "map.csv", tmp_path / "obs.csv")
    assert [f.m_f for f in frames] == [2, 1]
    assert frames[0].ids == (3, 9)
    np.testing.assert_array_equal(frames[0].f_w, _world().positions[[0, 2]])
    np.testing.assert_array_equal(frames[1].f_b, [[7.0, 8.0, 9.0]])


def test_unknown_feature(tmp_path):
    write_world_map(tmp_path / "map.csv", _world())
    (tmp_path / "obs.csv").write_text("100,4,1,2,3\n")
    with pytest.raises(UnknownFeatureId, match="obs.csv:1"):
        read_feature_frames(tmp_path / "map.csv", tmp_path / "obs.csv")


def test_observations_out_of_order(tmp_path):
    write_world_map(tmp_path / "map.csv", _world())
    (tmp_path / "obs.csv").write_text("200,3,1,2,3\n100,5,1,2,3\n")
    with pytest.raises(NonMonotoneTime):
        read_feature_frames(tmp_path / "map.csv", tmp_path / "obs.csv")


def test_duplicate_map_id(tmp_path):
    (tmp_path / "map.csv").write_text("1,0,0,0\n2,0,0,0\n1,1,1,1\n")
    with pytest.raises(ParseError, match=":3:"):
        read_world_map(tmp_path / "map.csv")


def test_feature_round_trip(tmp_path, rng):
    world = _world()
    frames = [FeatureFrame(100 * (k + 1), [3, 9], world.lookup([3, 9]), rng.normal(size=(2, 3)) / 7)
              for k in range(4)]
    write_world_map(tmp_path / "map.csv", world)
    write_feature_obs(tmp_path / "obs.csv", frames)
    w2, f2 = read_feature_frames(tmp_path / "map.csv", tmp_path / "obs.csv")
    assert w2.positions.tobytes() == world.positions.tobytes()
    for a, b in zip(frames, f2):
        assert (a.t, a.ids) == (b.t, b.ids)
        assert a.f_b.tobytes() == b.f_b.tobytes()


def test_states_round_trip(tmp_path, rng):
    q = rng.normal(size=(5, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    X = np.hstack([q, rng.normal(size=(5, 12))])
    t = np.arange(5, dtype=np.int64) * 7
    write_states_csv(tmp_path / "s.csv", t, X)
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header.startswith("timestamp_ns,p_x,p_y,p_z,q_w,q_x,q_y,q_z,v_x")
    t2, X2 = read_states_csv(tmp_path / "s.csv")
    assert t2.tolist() == t.tolist()
    assert X2.tobytes() == X.tobytes()


def test_states_reject_non_unit_quaternion(tmp_path):
    row = [0, 0, 0, 0, 0.9, 0, 0, 0] + [0] * 9
    (tmp_path / "s.csv").write_text(",".join(map(str, row)) + "\n")
    with pytest.raises(ParseError, match="quaternion norm"):
        read_states_csv(tmp_path / "s.csv")


def test_diagnostics_round_trip(tmp_path):
    rows = [(5, 0, 0, 0.0, 1.5, 0.0, 0), (10, 1, 90, 0.25, 1.25, 12.5, 1)]
    write_diagnostics(tmp_path / "d.csv", rows)
    assert read_diagnostics(tmp_path / "d.csv") == rows


def test_run_output_zero_error(tmp_path):
    t = np.arange(3, dtype=np.int64)
    X = np.zeros((3, 16))
    X[:, 0] = 1.0
    m = compute_metrics(t, X, t, X)
    write_run_output(tmp_path, m, np.array([1.0, 2.0, 3.0]))
    lines = (tmp_path / "errors.csv").read_text().splitlines()
    assert lines[0] == ",".join(dataio.ERROR_HEADER)
    assert lines[1] == "0," + ",".join(["0.0"] * 12) + ",1.0"
    summary = json.loads((tmp_path / "metrics.json").read_text())
    assert summary["rmse"] == 0.0 and summary["steps"] == 3


def test_run_output_matches_metrics(tmp_path, rng):
    t = np.arange(40, dtype=np.int64) * 5_000_000
    X = np.zeros((40, 16))
    X[:, 0] = 1.0
    est = X.copy()
    est[:, 4:10] = rng.normal(size=(40, 6)) / 3
    m = compute_metrics(t, est, t, X)
    write_run_output(tmp_path / "a", m)
    write_run_output(tmp_path / "b", m)
    summary = json.loads((tmp_path / "a" / "metrics.json").read_text())
    assert summary["rmse"] == m.rmse and summary["ssrmse"] == m.ssrmse
    for name in ("errors.csv", "metrics.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_dataset_round_trip(tmp_path, rng):
    world = _world()
    imu = [ImuSample(5_000_000 * k, rng.normal(size=3), rng.normal(size=3)) for k in range(4)]
    frames = [FeatureFrame(10_000_000, [3, 5], world.lookup([3, 5]), rng.normal(size=(2, 3)))]
    X = np.zeros((5, 16))
    X[:, 0] = 1.0
    ds = Dataset(imu, frames, world, np.arange(5, dtype=np.int64) * 5_000_000, X, {"imu_rate": 200.0})
    write_dataset(tmp_path, ds)
    back = read_dataset(tmp_path)
    assert len(back.imu) == 4 and len(back.frames) == 1
    assert back.nominal_dt == pytest.approx(0.005)
    assert back.truth.tobytes() == X.tobytes()


def test_missing_dataset(tmp_path):
    with pytest.raises(IoError):
        read_dataset(tmp_path / "none")
