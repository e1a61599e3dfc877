import numpy as np
import pytest

from bdris.channels import ScenarioChannels, rayleigh_vector
from bdris.solver import RisArchitecture, generate_targets


def random_instance(rng, N, Gs, L, rho=1.0):
    arch = RisArchitecture.from_group_size(N, Gs)
    channels = ScenarioChannels(
        rayleigh_vector(N, rho, rng), [rayleigh_vector(N, rho, rng) for _ in range(L)]
    )
    targets = generate_targets(channels, arch, rng)
    return channels, targets, arch


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
