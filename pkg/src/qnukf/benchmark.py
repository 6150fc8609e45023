"""The standard synthetic convergence scenario.

A 60 s circle (radius 2 m, 0.5 rad/s, slow yaw and a 0.1 rad tilt wobble)
with the default IMU and feature noise, biases starting away from zero, and
a filter started 0.5 rad and 1 m away from the truth. Both texts are valid
``simulate --spec`` and ``run --config`` files.
"""

from __future__ import annotations

import math

from .config import RunConfig, SimConfig, parse_run_config, parse_sim_config

SEEDS = (0, 1, 2, 3, 4)

SPEC_TEXT = """\
kind = circle
amplitude = 2 2 0
angular_rate = 0.5
yaw_rate = 0.2
tilt = 0.1
center = 0 0 2
duration = 60
imu_rate = 200
cam_rate = 20
seed = 0
b0_w = 0.002 -0.001 0.0015
b0_a = 0.02 -0.01 0.03
"""

_u = 1.0 / math.sqrt(3.0)

CONFIG_TEXT = f"""\
init = truth
# 0.5 rad about (1,1,1)/sqrt(3), 1 m along the same axis
init_rot_offset = {0.5 * _u!r} {0.5 * _u!r} {0.5 * _u!r}
init_pos_offset = {_u!r} {_u!r} {_u!r}
P0_diag = 0.25 0.25 0.25 1 1 1 0.25 0.25 0.25 1e-4 1e-4 1e-4 1e-3 1e-3 1e-3
"""


def sim_config() -> SimConfig:
    return parse_sim_config(SPEC_TEXT)


def run_config() -> RunConfig:
    return parse_run_config(CONFIG_TEXT)
