import math

import numpy as np
import pytest


def random_geometry(rng, S, min_el=10.0):
    """Unit LOS rows (ENU components) at random az/el above ``min_el`` degrees."""
    az = rng.uniform(0, 2 * math.pi, S)
    el = np.radians(rng.uniform(min_el, 90.0, S))
    return np.column_stack([np.cos(el) * np.sin(az), np.cos(el) * np.cos(az), np.sin(el)])


def random_spd(rng, S, ridge=0.1):
    B = rng.standard_normal((S, S))
    return B @ B.T + ridge * np.eye(S)


def random_psd(rng, S, rank=None):
    rank = S if rank is None else rank
    B = rng.standard_normal((S, rank))
    return B @ B.T


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rel_fro(x, y):
    return np.linalg.norm(np.asarray(x) - np.asarray(y)) / np.linalg.norm(y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion of the package")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[marker.args[0]] = (marker.args[1], report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome = _ACCEPTANCE[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
