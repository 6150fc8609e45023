"""Numba kernels vs the pure-numpy fallback.

Times each batch kernel on one filter cycle's worth of sigma points (43 rows,
30 features), then a full 60 s QNUKF run under each backend in a subprocess,
since the backend is fixed at import time by QNUKF_DISABLE_NUMBA.

    python benchmarks/bench_kernels.py [--repeat N] [--skip-run]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from qnukf import _kernels, _vectorized, rotation as rot

RUN_SNIPPET = """
import time
from dataclasses import replace
from qnukf import backend
from qnukf.config import RunConfig, SimConfig
from qnukf.pipeline import run_dataset, simulate_dataset
ds = simulate_dataset(SimConfig(trajectory=replace(SimConfig().trajectory, duration=60.0)), 0)
run_dataset(replace(ds, imu=ds.imu[:20], frames=ds.frames[:2]), "qnukf", RunConfig(P0_diag=(1e-2,) * 15))
res = run_dataset(ds, "qnukf", RunConfig(P0_diag=(1e-2,) * 15))
print(backend.NAME, res.runtime_s, res.runtime_s / len(ds.imu) * 1e3)
"""


def inputs(seed=0):
    rng = np.random.default_rng(seed)
    X = np.empty((43, 16))
    X[:, 0:4] = rot.normalize(rng.normal(size=(43, 4)))
    X[:, 4:] = rng.normal(size=(43, 12))
    N = 1e-3 * rng.normal(size=(43, 6))
    D = 0.1 * rng.normal(size=(43, 15))
    F = rng.uniform(-5, 5, size=(30, 3))
    w = rng.normal(size=43)
    g = np.array([0.0, 0.0, -9.80665])
    return {
        "transition_batch": (X, N, rng.normal(size=3), rng.normal(size=3), g, 0.005),
        "measurement_batch": (X, F),
        "oplus_batch": (X[0], D),
        "ominus_batch": (X, X[0]),
        "weighted_sum": (w, X),
        "weighted_outer": (w, D, D),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--skip-run", action="store_true")
    args = ap.parse_args()

    print(f"{'kernel':<18} {'numba us':>10} {'numpy us':>10} {'speedup':>8}")
    for name, a in inputs().items():
        fast, slow = getattr(_kernels, name), getattr(_vectorized, name)
        fast(*a)  # compile
        np.testing.assert_allclose(fast(*a), slow(*a), rtol=1e-12, atol=1e-12)
        t_fast = min(timeit.repeat(lambda: fast(*a), number=args.repeat, repeat=3)) / args.repeat * 1e6
        t_slow = min(timeit.repeat(lambda: slow(*a), number=args.repeat, repeat=3)) / args.repeat * 1e6
        print(f"{name:<18} {t_fast:10.2f} {t_slow:10.2f} {t_slow / t_fast:8.1f}")

    if args.skip_run:
        return
    print()
    print(f"{'backend':<8} {'60 s run [s]':>13} {'ms/step':>8}")
    for flag in ("0", "1"):
        env = dict(os.environ, QNUKF_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", RUN_SNIPPET], env=env, capture_output=True, text=True, check=True)
        name, total, per = out.stdout.split()
        print(f"{name:<8} {float(total):13.2f} {float(per):8.3f}")


if __name__ == "__main__":
    main()
