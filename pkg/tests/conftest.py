import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from litetts import ModelConfig, init_weights, micro_config  # noqa: E402


@pytest.fixture(scope="session")
def micro():
    return micro_config()


@pytest.fixture(scope="session")
def micro_weights(micro):
    return init_weights(micro, seed=0)


@pytest.fixture(scope="session")
def default_cfg():
    return ModelConfig()


@pytest.fixture(scope="session")
def default_weights(default_cfg):
    return init_weights(default_cfg, seed=0, scope="inference")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
