import numpy as np
import pytest

from stprune.video_io import VideoVolume, chroma_shape


def random_volume(rng, frames, height, width, fps=120.0, low=0, high=256):
    ch, cw = chroma_shape(height, width)
    return VideoVolume(
        rng.integers(low, high, size=(frames, height, width), dtype=np.uint8),
        rng.integers(0, 256, size=(frames, ch, cw), dtype=np.uint8),
        rng.integers(0, 256, size=(frames, ch, cw), dtype=np.uint8),
        fps,
    )


def constant_volume(value, frames, height, width, fps=120.0):
    return VideoVolume.from_luma(np.full((frames, height, width), value, dtype=np.uint8), fps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if report.skipped:
            _criteria[crit] = "SKIP"
        else:
            _criteria[crit] = "PASS" if report.passed else "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None and marker.args:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _criteria.items():
        terminalreporter.write_line(f"[{status}] {name}")
