import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_quats
from qnukf import _kernels, _vectorized, backend
from qnukf._jit import HAVE_NUMBA


def states(rng, n):
    return np.hstack([random_quats(rng, n), rng.normal(size=(n, 12))])


def test_transition_parity(rng):
    X, N = states(rng, 43), rng.normal(size=(43, 6)) * 0.1
    args = (X, N, rng.normal(size=3), rng.normal(size=3), np.array([0, 0, -9.80665]), 0.005)
    np.testing.assert_allclose(_kernels.transition_batch(*args), _vectorized.transition_batch(*args),
                               rtol=0, atol=1e-13)


def test_measurement_parity(rng):
    X, F = states(rng, 43), rng.normal(size=(30, 3)) * 4
    np.testing.assert_allclose(_kernels.measurement_batch(X, F), _vectorized.measurement_batch(X, F),
                               rtol=0, atol=1e-13)


def test_tangent_parity(rng):
    x = states(rng, 1)[0]
    D = rng.normal(size=(43, 15))
    D[0] = 0.0
    D[1, :3] = 1e-12
    np.testing.assert_allclose(_kernels.oplus_batch(x, D), _vectorized.oplus_batch(x, D), rtol=0, atol=1e-13)
    X = _vectorized.oplus_batch(x, D * 0.5)
    np.testing.assert_allclose(_kernels.ominus_batch(X, x), _vectorized.ominus_batch(X, x), rtol=0, atol=1e-12)


def test_weighted_parity(rng):
    w = rng.normal(size=43)
    A, B = rng.normal(size=(43, 15)), rng.normal(size=(43, 12))
    np.testing.assert_allclose(_kernels.weighted_sum(w, A), _vectorized.weighted_sum(w, A), atol=1e-13)
    np.testing.assert_allclose(_kernels.weighted_outer(w, A, B), _vectorized.weighted_outer(w, A, B), atol=1e-12)


def test_jacobi_matches_lapack(rng):
    A = rng.normal(size=(4, 4))
    A = A + A.T
    vals, vecs = _kernels.jacobi_eigh(A)
    np.testing.assert_allclose(np.sort(vals), np.linalg.eigvalsh(A), atol=1e-12)
    np.testing.assert_allclose(A @ vecs, vecs * vals, atol=1e-12)


def _run_backend(disable: bool) -> str:
    code = (
        "import numpy as np\n"
        "from qnukf import backend\n"
        "from qnukf.model import GRAVITY, ImuSample, NavState, NoiseConfig\n"
        "from qnukf.pipeline import run_filter\n"
        "imu = [ImuSample(k * 5000000, [0.1, -0.2, 0.05], -GRAVITY + [0.1, 0, 0]) for k in range(50)]\n"
        "res = run_filter('qnukf', imu, [], NavState([1.0, 0, 0, 0]), 1e-3 * np.eye(15), NoiseConfig.default())\n"
        "print(backend.NAME)\n"
        "print(','.join(repr(float(v)) for v in res.states[-1]))\n"
    )
    env = dict(os.environ)
    env.pop("QNUKF_DISABLE_NUMBA", None)
    if disable:
        env["QNUKF_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return proc.stdout


def test_env_flag_selects_numpy():
    name, values = _run_backend(True).split()
    assert name == "numpy"
    assert backend.NAME in ("numba", "numpy")
    if not HAVE_NUMBA:
        pytest.skip("numba is not installed")
    name2, values2 = _run_backend(False).split()
    assert name2 == "numba"
    a = np.array(values.split(","), dtype=float)
    b = np.array(values2.split(","), dtype=float)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-10)
