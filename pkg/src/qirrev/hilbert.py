"""Density operators, projective observables and spectral matrix functions.

Everything here works on dense ``complex128`` arrays of dimension at most
:data:`MAX_DIM`.  Entropies are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    DimMismatch,
    NotHermitian,
    NotPositive,
    NotProjective,
    NotUnitTrace,
    SingularPower,
    ValidationError,
)

MAX_DIM = 64

VALIDATION_TOL = 1e-10
SUPPORT_TOL = 1e-12
SPECTRAL_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


def _square(matrix, what: str = "matrix") -> np.ndarray:
    a = np.asarray(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"{what} must be square, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[0] > MAX_DIM:
        raise DimMismatch(f"{what} dimension {a.shape[0]} outside [1, {MAX_DIM}]")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-decomposition of a Hermitian matrix, ``A = V diag(w) V^dagger``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)

    def apply(self, f) -> np.ndarray:
        """Return ``sum_j f(w_j) |v_j><v_j|`` for a vectorised scalar function ``f``."""
        v = self.eigenvectors
        return (v * f(self.eigenvalues)) @ dagger(v)


def spectral_decomposition(matrix) -> SpectralDecomposition:
    """Diagonalise a Hermitian matrix.

    The input is symmetrised before calling LAPACK so tiny anti-Hermitian
    noise does not leak into the eigenvectors.
    """
    a = _square(matrix)
    w, v = np.linalg.eigh(0.5 * (a + dagger(a)))
    w.flags.writeable = False
    v.flags.writeable = False
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated density matrix. Build it with :func:`validate_density`."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return spectral_decomposition(self.matrix)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues with the PSD noise band ``[-1e-10, 0)`` clipped to zero."""
        return np.clip(self.spectrum.eigenvalues, 0.0, None)

    def is_full_rank(self) -> bool:
        return bool(np.all(self.eigenvalues >= SUPPORT_TOL))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim}, eigenvalues={np.round(self.eigenvalues, 6)})"


def validate_density(matrix, tol: float = VALIDATION_TOL) -> DensityOperator:
    """Check Hermiticity, positivity and unit trace, in that order.

    Raises the first violated invariant (:class:`NotHermitian`,
    :class:`NotPositive` or :class:`NotUnitTrace`) with the measured
    violation attached as ``.violation``.
    """
    if isinstance(matrix, DensityOperator):
        return matrix
    a = _square(matrix, "density matrix")
    herm = float(np.max(np.abs(a - dagger(a))))
    if herm > tol:
        raise NotHermitian(f"NotHermitian: max|rho - rho^dagger| = {herm:.3e} > {tol:g}", herm)
    a = 0.5 * (a + dagger(a))
    lam_min = float(np.linalg.eigvalsh(a)[0])
    if lam_min < -tol:
        raise NotPositive(f"NotPositive: smallest eigenvalue {lam_min:.3e} < {-tol:g}", -lam_min)
    trace_err = abs(complex(np.trace(a)) - 1.0)
    if trace_err > tol:
        raise NotUnitTrace(f"NotUnitTrace: |Tr rho - 1| = {trace_err:.3e} > {tol:g}", trace_err)
    return DensityOperator(_frozen(a))


def maximally_mixed(dim: int) -> DensityOperator:
    return validate_density(np.eye(dim) / dim)


def pure_state(vector) -> DensityOperator:
    psi = np.asarray(vector, dtype=np.complex128).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return validate_density(np.outer(psi, psi.conj()))


def matrix_power(rho: DensityOperator, z: complex) -> np.ndarray:
    """Spectral power ``rho**z`` with complex exponent.

    Eigenvalues below ``1e-12`` count as exact zeros; ``0**z`` is defined as
    0 when ``Re z > 0`` and is an error otherwise.
    """
    rho = validate_density(rho)
    z = complex(z)
    lam = rho.eigenvalues
    zero = lam < SUPPORT_TOL
    if np.any(zero) and z.real <= 0.0:
        raise SingularPower(
            f"SingularPower: rho has {int(zero.sum())} zero eigenvalue(s) and Re(z) = {z.real:g} <= 0"
        )
    powered = np.zeros(lam.shape, dtype=np.complex128)
    pos = ~zero
    powered[pos] = np.exp(z * np.log(lam[pos]))
    v = rho.spectrum.eigenvectors
    return (v * powered) @ dagger(v)


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz])
    return out


def shannon_entropy(p: Sequence[float]) -> float:
    return float(-np.sum(_xlogx(np.asarray(p, dtype=float))))


def von_neumann_entropy(rho: DensityOperator) -> float:
    rho = validate_density(rho)
    s = shannon_entropy(rho.eigenvalues)
    return min(max(s, 0.0), math.log(rho.dim))


def relative_entropy(rho_a: DensityOperator, rho_b: DensityOperator) -> float:
    """Quantum relative entropy ``Tr[a (ln a - ln b)]`` in nats.

    Returns ``math.inf`` when the support of ``a`` is not contained in the
    support of ``b``.
    """
    rho_a = validate_density(rho_a)
    rho_b = validate_density(rho_b)
    if rho_a.dim != rho_b.dim:
        raise DimMismatch(f"DimMismatch: {rho_a.dim} vs {rho_b.dim}")
    mu = rho_b.eigenvalues
    v = rho_b.spectrum.eigenvectors
    # populations of a in the eigenbasis of b
    pops = np.real(np.einsum("ij,ik,kj->j", v.conj(), rho_a.matrix, v))
    kernel = mu < SUPPORT_TOL
    if np.any(kernel) and float(np.sum(np.abs(pops[kernel]))) > SUPPORT_TOL:
        return math.inf
    support = ~kernel
    cross = float(np.sum(pops[support] * np.log(mu[support])))
    neg_entropy = float(np.sum(_xlogx(rho_a.eigenvalues)))
    return neg_entropy - cross


@dataclass(frozen=True, eq=False)
class ProjectiveObservable:
    """Complete family of orthogonal projectors with distinct real labels."""

    labels: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.projectors) or not self.projectors:
            raise NotProjective("NotProjective: need one label per projector and at least one outcome")
        if len(set(self.labels)) != len(self.labels):
            raise NotProjective(f"NotProjective: labels must be distinct, got {self.labels}")
        if not all(math.isfinite(x) for x in self.labels):
            raise NotProjective("NotProjective: labels must be finite reals")
        dim = self.projectors[0].shape[0]
        ident = np.eye(dim)
        total = np.zeros((dim, dim), dtype=np.complex128)
        for i, p in enumerate(self.projectors):
            if p.shape != (dim, dim):
                raise DimMismatch(f"DimMismatch: projector {i} has shape {p.shape}")
            err = float(np.max(np.abs(p - dagger(p))))
            if err > VALIDATION_TOL:
                raise NotProjective(f"NotProjective: projector {i} not Hermitian ({err:.3e})", err)
            err = float(np.max(np.abs(p @ p - p)))
            if err > VALIDATION_TOL:
                raise NotProjective(f"NotProjective: projector {i} not idempotent ({err:.3e})", err)
            for j in range(i):
                err = float(np.max(np.abs(p @ self.projectors[j])))
                if err > VALIDATION_TOL:
                    raise NotProjective(
                        f"NotProjective: projectors {j} and {i} not orthogonal ({err:.3e})", err
                    )
            total += p
        err = float(np.max(np.abs(total - ident)))
        if err > VALIDATION_TOL:
            raise NotProjective(f"NotProjective: completeness violated, max|sum P - 1| = {err:.3e}", err)

    @classmethod
    def from_projectors(cls, projectors, labels: Sequence[float] | None = None) -> "ProjectiveObservable":
        projs = tuple(_frozen(_square(p, "projector")) for p in projectors)
        if labels is None:
            labels = range(len(projs))
        return cls(labels=tuple(float(x) for x in labels), projectors=projs)

    @classmethod
    def from_basis(cls, basis, labels: Sequence[float] | None = None) -> "ProjectiveObservable":
        """Rank-one projectors onto the columns of the unitary ``basis``."""
        u = _square(basis, "basis")
        projs = [np.outer(u[:, j], u[:, j].conj()) for j in range(u.shape[1])]
        return cls.from_projectors(projs, labels)

    @classmethod
    def computational(cls, dim: int, labels: Sequence[float] | None = None) -> "ProjectiveObservable":
        return cls.from_basis(np.eye(dim), labels)

    @classmethod
    def fourier(cls, dim: int, labels: Sequence[float] | None = None) -> "ProjectiveObservable":
        """Discrete Fourier basis; for ``dim == 2`` this is the Hadamard ``|+>, |->`` basis."""
        return cls.from_basis(dft_matrix(dim), labels)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self) -> int:
        return len(self.projectors)

    def ranks(self) -> list[int]:
        return [int(round(np.trace(p).real)) for p in self.projectors]

    def is_rank_one(self) -> bool:
        return all(r == 1 for r in self.ranks())

    def probabilities(self, rho: DensityOperator) -> np.ndarray:
        m = np.asarray(rho.matrix if isinstance(rho, DensityOperator) else rho)
        return np.array([np.real(np.trace(p @ m)) for p in self.projectors])

    def measure(self, rho: DensityOperator) -> DensityOperator:
        """Non-selective post-measurement state ``sum_i P_i rho P_i``."""
        m = rho.matrix
        return validate_density(sum(p @ m @ p for p in self.projectors))

    def commutes_with(self, rho: DensityOperator, tol: float = SPECTRAL_TOL) -> bool:
        m = rho.matrix
        return all(float(np.max(np.abs(p @ m - m @ p))) <= tol for p in self.projectors)

    def matrix(self) -> np.ndarray:
        """The observable ``sum_i a_i P_i``."""
        return sum(a * p for a, p in zip(self.labels, self.projectors))


def dft_matrix(dim: int) -> np.ndarray:
    j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    return np.exp(2j * np.pi * j * k / dim) / np.sqrt(dim)


def unitarity_error(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))))


__all__ = [
    "MAX_DIM",
    "DensityOperator",
    "ProjectiveObservable",
    "SpectralDecomposition",
    "ValidationError",
    "dagger",
    "dft_matrix",
    "matrix_power",
    "maximally_mixed",
    "pure_state",
    "relative_entropy",
    "shannon_entropy",
    "spectral_decomposition",
    "unitarity_error",
    "validate_density",
    "von_neumann_entropy",
]
