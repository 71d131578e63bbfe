import math

import numpy as np
import pytest

from seqplan.geometry import Box, Cylinder, Pose, quat_from_axis_angle
from seqplan.scene import Scene, SceneObject, StaticBody, Workspace
from seqplan.sceneio import load_scene

FLOOR = StaticBody("floor", Box((1.0, 1.0, 0.05)), Pose((0.0, 0.0, -0.05)))
WIDE = Workspace((-1.0, -1.0, -0.1), (1.0, 1.0, 2.0))


def box(oid, half, pos, mass=1.0, q=(1.0, 0.0, 0.0, 0.0), friction=0.5):
    return SceneObject(oid, Box(half), Pose(pos, q), mass=mass, friction=friction)


def floor_scene(*objects, static=(FLOOR,), workspace=WIDE, name="test"):
    return Scene(tuple(objects), workspace, tuple(static), name=name)


def yaw(deg):
    return tuple(quat_from_axis_angle((0.0, 0.0, 1.0), math.radians(deg)))


@pytest.fixture(scope="session")
def scenes():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_scene(name)
        return cache[name]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


__all__ = ["box", "floor_scene", "yaw", "FLOOR", "WIDE", "Cylinder"]


# one pass/fail line per acceptance criterion in the terminal summary
_ACCEPTANCE: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    entry = _ACCEPTANCE.setdefault(number, {"title": title, "ok": True, "seconds": 0.0})
    if report.when == "call":
        entry["seconds"] += report.duration
    if report.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[number]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {e['title']}  ({e['seconds']:.1f}s)")
