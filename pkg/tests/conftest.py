import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wickito import ProcessModel, parse_preset

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def white():
    return ProcessModel(parse_preset("white"), 200)


@pytest.fixture(scope="session")
def white400():
    return ProcessModel(parse_preset("white"), 400)


@pytest.fixture(scope="session")
def quartic():
    return ProcessModel(parse_preset("quartic"), 200)


@pytest.fixture(scope="session")
def fbm03():
    return ProcessModel(parse_preset("fbm:H=0.3"), 200)


@pytest.fixture(scope="session")
def fbm06():
    return ProcessModel(parse_preset("fbm:H=0.6"), 200)


@pytest.fixture(scope="session")
def fbm07():
    return ProcessModel(parse_preset("fbm:H=0.7"), 200)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# acceptance lines: tests attach ("criterion", label) and ("detail", text) via record_property

_acceptance = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _acceptance.append((props["criterion"], report.outcome, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, detail in _acceptance:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}  {detail}")
