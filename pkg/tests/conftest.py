import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


@st.composite
def unit_quaternions(draw):
    q = draw(arrays(np.float64, 4, elements=finite).filter(lambda a: np.linalg.norm(a) > 1e-3))
    return q / np.linalg.norm(q)


@st.composite
def rotvecs(draw, max_angle=np.pi - 1e-3):
    axis = draw(arrays(np.float64, 3, elements=finite).filter(lambda a: np.linalg.norm(a) > 1e-3))
    angle = draw(st.floats(0.0, max_angle))
    return angle * axis / np.linalg.norm(axis)


def random_quats(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one PASS/FAIL line per acceptance criterion, collected from test_acceptance.py
_CRITERIA: dict = {}
_NAME = re.compile(r"test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m or "test_acceptance" not in report.nodeid:
        return
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    num = int(m.group(1))
    ok = report.outcome == "passed" and not hasattr(report, "wasxfail")
    detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
    if hasattr(report, "wasxfail"):
        detail = (detail + "; " if detail else "") + "known gap: " + report.wasxfail
    prev = _CRITERIA.get(num, (True, []))
    _CRITERIA[num] = (prev[0] and ok, prev[1] + ([detail] if detail else []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        ok, details = _CRITERIA[num]
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}"
        if details:
            line += "  (" + " | ".join(details) + ")"
        terminalreporter.write_line(line)
