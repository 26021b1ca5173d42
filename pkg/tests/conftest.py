import numpy as np
import pytest

from forgery_evidence.forgery_bench import ManipulationSpec, apply_manipulation, synthesize_base
from forgery_evidence.patch_grid import save_png


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def synth_png(tmp_path):
    """Write a synthetic 224x224 image with a noise splice; returns the path."""

    def make(seed=0, name=None, strength=0.2, manipulated=True):
        img = synthesize_base(224, 224, seed)
        if manipulated:
            img, _ = apply_manipulation(img, ManipulationSpec("splice_noise", (64, 96, 32, 32), strength, seed))
        path = tmp_path / (name or f"img{seed}.png")
        save_png(img, path)
        return path

    return make


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): exit criterion reported in the summary")
    config._acceptance = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        item.config._acceptance.append((marker.args[0], report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not config._acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in config._acceptance:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({duration:.1f}s)")
