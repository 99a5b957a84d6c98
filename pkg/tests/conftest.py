import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from crlevi import corpus

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def manifests():
    return {m.name: m for m in corpus.build_manifests()}


@pytest.fixture(scope="session")
def systems(manifests):
    return {name: m.system() for name, m in manifests.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
