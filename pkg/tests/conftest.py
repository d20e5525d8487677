import numpy as np
import pytest

from weakclosure import toolkit as tk
from weakclosure.class2 import main_group, omega_of_size
from weakclosure.reps import BlockModule

ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def G():
    return main_group()


@pytest.fixture(scope="session")
def V0(G):
    return BlockModule(G)


@pytest.fixture(scope="session")
def om2():
    return omega_of_size(2)


@pytest.fixture(scope="session")
def om4():
    return omega_of_size(4)


@pytest.fixture(scope="session")
def ext():
    return tk.extraspecial_instance()
