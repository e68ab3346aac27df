import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from etalon_forge import cli, config

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BASE_R = (0.87, 0.99, 0.91)
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def example_cfg():
    return config.load(config.example_path())


@pytest.fixture(scope="session")
def design(example_cfg):
    """(base comb, desired 20 pm profile) for the bundled two-cavity example."""
    return cli.build_target(example_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
