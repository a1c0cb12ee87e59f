import warnings

import numpy as np
import pytest

from nehari_forge import ContinuationConfig, Domain, SystemParams, continue_in_t


@pytest.fixture(scope="session")
def square64():
    return Domain.unit_square(64)


@pytest.fixture(scope="session")
def square32():
    return Domain.unit_square(32)


@pytest.fixture(scope="session")
def lotka():
    return SystemParams(3, [1, 1], [[0, -0.5], [-0.5, 0]], 1, 1)


@pytest.fixture(scope="session")
def sync_params():
    return SystemParams(3, [1, 4], [[0, -2], [-1, 0]], 1, 1)


@pytest.fixture(scope="session")
def generic_params():
    return SystemParams(3, [1, 1], [[0, -1], [-0.25, 0]], 1, 1)


@pytest.fixture(scope="session")
def lotka_solution(lotka, square64):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u, trace = continue_in_t(lotka, square64, ContinuationConfig())
    return u, trace


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def positive_state(rng, domain, ell, amplitude=1.0):
    phi = domain.sine_mode((1,) * domain.dimension)
    return np.stack([amplitude * phi * (1.0 + 0.3 * rng.random(domain.shape)) for _ in range(ell)])


# one line per acceptance criterion, printed at the end of every run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
