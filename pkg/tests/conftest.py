from __future__ import annotations

import numpy as np
import pytest

from qirrev.channels import HADAMARD, QuantumChannel, TimeReversal, identity_channel
from qirrev.ensembles import random_density, random_observable, random_unital_channel
from qirrev.hilbert import ProjectiveObservable, validate_density
from qirrev.twotime import ProtocolSpec

ACCEPTANCE_LINES: dict[str, str] = {}


def record_criterion(key: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def z_basis(dim: int = 2) -> ProjectiveObservable:
    return ProjectiveObservable.computational(dim)


def hadamard_spec() -> ProtocolSpec:
    return ProtocolSpec(
        validate_density(np.diag([0.9, 0.1])),
        z_basis(),
        QuantumChannel.from_unitary(HADAMARD),
        z_basis(),
    )


def random_spec(rng: np.random.Generator, dim: int | None = None) -> ProtocolSpec:
    dim = int(rng.integers(2, 9)) if dim is None else dim
    return ProtocolSpec(
        random_density(dim, rng),
        random_observable(dim, rng),
        random_unital_channel(dim, rng, n_unitaries=int(rng.integers(1, 5))),
        random_observable(dim, rng),
        TimeReversal.conjugation(dim),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def had_spec():
    return hadamard_spec()


@pytest.fixture(scope="session")
def random_specs():
    gen = np.random.default_rng(987654321)
    return [random_spec(gen) for _ in range(100)]


@pytest.fixture
def identity_spec():
    return ProtocolSpec(validate_density(np.diag([0.75, 0.25])), z_basis(), identity_channel(2), z_basis())
