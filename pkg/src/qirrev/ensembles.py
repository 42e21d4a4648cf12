"""Random states, observables and unital channels for randomized checks."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .channels import QuantumChannel, TimeReversal
from .hilbert import DensityOperator, ProjectiveObservable, validate_density


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Hilbert-Schmidt random state, optionally of reduced rank."""
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    m = g @ g.conj().T
    return validate_density(m / np.trace(m).real)


def random_observable(dim: int, rng: np.random.Generator) -> ProjectiveObservable:
    """Rank-one projectors onto a Haar-random basis, with distinct random labels."""
    labels = np.sort(rng.uniform(-1.0, 1.0, size=dim)) + np.arange(dim)
    return ProjectiveObservable.from_basis(random_unitary(dim, rng), labels)


def random_unital_channel(dim: int, rng: np.random.Generator, n_unitaries: int = 3) -> QuantumChannel:
    """Convex mixture of Haar unitaries (always unital)."""
    w = rng.dirichlet(np.ones(n_unitaries))
    return QuantumChannel.from_kraus([np.sqrt(wi) * random_unitary(dim, rng) for wi in w])


def random_reversal(dim: int, rng: np.random.Generator) -> TimeReversal:
    """A random symmetric unitary ``V = U U^T``, so that ``V conj(V) = 1``."""
    u = random_unitary(dim, rng)
    return TimeReversal.from_unitary(u @ u.T)
