import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from posekit.geometry import CameraIntrinsics  # noqa: E402

_acceptance = {}
_RANK = ["PASS", "WAIVED", "FAIL"]


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    key = (int(str(number).split(".")[0]), str(number), title)
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        state = "PASS" if rep.passed else ("WAIVED" if rep.skipped else "FAIL")
        prev = _acceptance.get(key, "PASS")
        # a criterion spanning several tests reports its worst outcome
        _acceptance[key] = max(prev, state, key=_RANK.index)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (_, number, title), state in sorted(_acceptance.items()):
        terminalreporter.write_line(f"[{state:6}] criterion {number}: {title}")


@pytest.fixture
def K():
    return CameraIntrinsics(600.0, 590.0, 320.0, 240.0, 640, 480)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
