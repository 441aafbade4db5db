import math

import numpy as np
import pytest

from aqcool import HermitianOperator, QuantumState, eigendecompose

ACCEPTANCE_LINES: list[str] = []


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def random_pure(rng: np.random.Generator, dim: int) -> QuantumState:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return QuantumState.pure(v, normalize=True)


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> QuantumState:
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return QuantumState.mixed(rho / np.trace(rho).real)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sz():
    return eigendecompose(HermitianOperator.named("sigma_z"))


@pytest.fixture(scope="session")
def sx():
    return eigendecompose(HermitianOperator.named("sigma_x"))


@pytest.fixture(scope="session")
def plus_state():
    return QuantumState.pure([1, 1], normalize=True)


HALF_PI = math.pi / 2


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
