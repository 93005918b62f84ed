import numpy as np
import pytest

from bosonic_meter.model import ProbeSet, SystemSpec
from bosonic_meter.onedim import OneDimModel, export_spectral


@pytest.fixture(scope="session")
def fig1_model():
    return OneDimModel(g=2.5, probes={"p0": 0.0, "p2": 2.0})


@pytest.fixture(scope="session")
def fig1_spectral(fig1_model):
    return export_spectral(fig1_model)


@pytest.fixture(scope="session")
def fig1_probes(fig1_model):
    return ProbeSet(fig1_model.labels)


@pytest.fixture
def plus_state():
    return SystemSpec.pure((0.0, 0.0), np.array([1.0, 1.0]) / np.sqrt(2.0))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module and module.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in module.REPORT:
            terminalreporter.write_line(line)
