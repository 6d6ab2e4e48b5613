import os
from pathlib import Path

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance criteria summary ---------------------------------------------------

_criteria: list[tuple[str, str]] = []


@pytest.fixture
def criterion(request):
    """Tag a test with an acceptance-criterion label for the summary."""
    def tag(label):
        request.node.user_properties.append(("criterion", label))
    return tag


def pytest_runtest_logreport(report):
    labels = [v for k, v in report.user_properties if k == "criterion"]
    if not labels:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        for label in labels:
            _criteria.append((outcome, label))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for outcome, label in _criteria:
        terminalreporter.write_line(f"[{outcome}] {label}")
