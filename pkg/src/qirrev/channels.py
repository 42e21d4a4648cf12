"""Kraus-form CPTP channels, piecewise-constant unitary evolution and time reversal."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DimMismatch, NotHermitian, NotTracePreserving, NotUnital, NotUnitary, ValidationError
from .hilbert import (
    VALIDATION_TOL,
    DensityOperator,
    ProjectiveObservable,
    _frozen,
    _square,
    dagger,
    unitarity_error,
    validate_density,
)

CHANNEL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """``rho -> sum_u E_u rho E_u^dagger`` with trace preservation checked on construction."""

    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.kraus_ops:
            raise NotTracePreserving("NotTracePreserving: empty Kraus list")
        dim = self.kraus_ops[0].shape[0]
        for i, e in enumerate(self.kraus_ops):
            if e.shape != (dim, dim):
                raise DimMismatch(f"DimMismatch: Kraus operator {i} has shape {e.shape}, expected {(dim, dim)}")
        err = self.trace_preservation_error()
        if err > CHANNEL_TOL:
            raise NotTracePreserving(
                f"NotTracePreserving: max|sum E^dagger E - 1| = {err:.3e} > {CHANNEL_TOL:g}", err
            )

    @classmethod
    def from_kraus(cls, kraus_ops: Sequence) -> "QuantumChannel":
        return cls(tuple(_frozen(_square(e, "Kraus operator")) for e in kraus_ops))

    @classmethod
    def from_unitary(cls, u) -> "QuantumChannel":
        u = _square(u, "unitary")
        err = unitarity_error(u)
        if err > CHANNEL_TOL:
            raise NotUnitary(f"NotUnitary: max|U^dagger U - 1| = {err:.3e}", err)
        return cls.from_kraus([u])

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def trace_preservation_error(self) -> float:
        s = sum(dagger(e) @ e for e in self.kraus_ops)
        return float(np.max(np.abs(s - np.eye(self.dim))))

    def unitality_error(self) -> float:
        s = sum(e @ dagger(e) for e in self.kraus_ops)
        return float(np.max(np.abs(s - np.eye(self.dim))))

    @cached_property
    def unital(self) -> bool:
        return self.unitality_error() <= CHANNEL_TOL

    def map(self, x) -> np.ndarray:
        """Action on an arbitrary operator (no validation)."""
        x = np.asarray(x, dtype=np.complex128)
        return sum(e @ x @ dagger(e) for e in self.kraus_ops)

    def __call__(self, rho: DensityOperator) -> DensityOperator:
        return apply(self, rho)

    def transfer_matrix(self) -> np.ndarray:
        """Column-stacked superoperator, ``vec(Phi(X)) = S vec(X)``.

        Two channels are the same map iff their transfer matrices agree;
        Kraus lists themselves are not unique.
        """
        return sum(np.kron(e.conj(), e) for e in self.kraus_ops)

    def __repr__(self) -> str:
        return f"QuantumChannel(dim={self.dim}, n_kraus={len(self.kraus_ops)}, unital={self.unital})"


def channel_distance(a: QuantumChannel, b: QuantumChannel) -> float:
    """Max elementwise difference of the two maps on all ``d**2`` matrix units."""
    if a.dim != b.dim:
        raise DimMismatch(f"DimMismatch: {a.dim} vs {b.dim}")
    return float(np.max(np.abs(a.transfer_matrix() - b.transfer_matrix())))


def apply(channel: QuantumChannel, rho: DensityOperator) -> DensityOperator:
    rho = validate_density(rho)
    if rho.dim != channel.dim:
        raise DimMismatch(f"DimMismatch: channel dim {channel.dim}, state dim {rho.dim}")
    return validate_density(channel.map(rho.matrix))


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel.from_kraus([np.eye(dim)])


def dephasing_channel(dim: int, p: float = 1.0) -> QuantumChannel:
    """Computational-basis dephasing: off-diagonals scaled by ``1 - p``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"dephasing strength must lie in [0, 1], got {p}")
    ops = []
    if p < 1.0:
        ops.append(np.sqrt(1.0 - p) * np.eye(dim))
    for i in range(dim):
        proj = np.zeros((dim, dim))
        proj[i, i] = 1.0
        ops.append(np.sqrt(p) * proj)
    return QuantumChannel.from_kraus(ops)


def weyl_operators(dim: int) -> list[np.ndarray]:
    """Clock-and-shift operators ``X^a Z^b``, an orthogonal unitary basis."""
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    out = []
    for a in range(dim):
        for b in range(dim):
            out.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return out


def depolarizing_channel(dim: int, p: float) -> QuantumChannel:
    """``rho -> (1 - p) rho + p * 1/d``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"depolarizing probability must lie in [0, 1], got {p}")
    ws = weyl_operators(dim)
    d2 = dim * dim
    ops = [np.sqrt(1.0 - p + p / d2) * ws[0]]
    ops += [np.sqrt(p / d2) * w for w in ws[1:]]
    return QuantumChannel.from_kraus(ops)


HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class HamiltonianSchedule:
    """Piecewise-constant Hamiltonian ``[(H_1, t_1), (H_2, t_2), ...]`` in time order (hbar = 1)."""

    segments: tuple[tuple[np.ndarray, float], ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValidationError("schedule needs at least one segment")
        dim = self.segments[0][0].shape[0]
        for i, (h, t) in enumerate(self.segments):
            if h.shape != (dim, dim):
                raise DimMismatch(f"DimMismatch: segment {i} Hamiltonian has shape {h.shape}")
            err = float(np.max(np.abs(h - dagger(h))))
            if err > VALIDATION_TOL:
                raise NotHermitian(f"NotHermitian: segment {i} Hamiltonian ({err:.3e})", err)
            if not (t > 0 and np.isfinite(t)):
                raise ValidationError(f"segment {i} duration must be positive and finite, got {t}")

    @classmethod
    def from_segments(cls, segments) -> "HamiltonianSchedule":
        return cls(tuple((_frozen(_square(h, "Hamiltonian")), float(t)) for h, t in segments))

    @property
    def dim(self) -> int:
        return self.segments[0][0].shape[0]

    @property
    def duration(self) -> float:
        return sum(t for _, t in self.segments)

    def propagator(self) -> np.ndarray:
        u = np.eye(self.dim, dtype=np.complex128)
        for h, t in self.segments:
            u = expm(-1j * t * h) @ u
        return u


def unitary_from_schedule(schedule: HamiltonianSchedule) -> QuantumChannel:
    """Single-Kraus channel for ``U = exp(-i H_n t_n) ... exp(-i H_1 t_1)``."""
    return QuantumChannel.from_unitary(schedule.propagator())


@dataclass(frozen=True, eq=False)
class TimeReversal:
    """Antiunitary ``Theta |phi> = V conj(|phi>)``; ``V = 1`` is plain complex conjugation."""

    basis_unitary: np.ndarray

    def __post_init__(self) -> None:
        err = unitarity_error(self.basis_unitary)
        if err > VALIDATION_TOL:
            raise NotUnitary(f"NotUnitary: time-reversal V fails unitarity by {err:.3e}", err)
        # Theta^2 must be a phase on every basis vector
        v = self.basis_unitary
        twice = v @ v.conj()
        for j in range(self.dim):
            col = twice[:, j]
            phase = col[j]
            off = np.delete(col, j)
            if abs(abs(phase) - 1.0) > VALIDATION_TOL or (off.size and np.max(np.abs(off)) > VALIDATION_TOL):
                raise NotUnitary("NotUnitary: double reversal is not a global phase on the basis")

    @classmethod
    def conjugation(cls, dim: int) -> "TimeReversal":
        return cls(_frozen(np.eye(dim)))

    @classmethod
    def from_unitary(cls, v) -> "TimeReversal":
        return cls(_frozen(_square(v, "time-reversal unitary")))

    @property
    def dim(self) -> int:
        return self.basis_unitary.shape[0]

    def vector(self, psi) -> np.ndarray:
        return self.basis_unitary @ np.conj(np.asarray(psi, dtype=np.complex128))

    def operator(self, x) -> np.ndarray:
        """``Theta X Theta^dagger`` realised as ``V conj(X) V^dagger``."""
        v = self.basis_unitary
        return v @ np.conj(np.asarray(x, dtype=np.complex128)) @ dagger(v)

    def observable(self, obs: ProjectiveObservable) -> ProjectiveObservable:
        if obs.dim != self.dim:
            raise DimMismatch(f"DimMismatch: observable dim {obs.dim}, reversal dim {self.dim}")
        return ProjectiveObservable.from_projectors([self.operator(p) for p in obs.projectors], obs.labels)


def reverse_state(rho: DensityOperator, rev: TimeReversal) -> DensityOperator:
    rho = validate_density(rho)
    if rho.dim != rev.dim:
        raise DimMismatch(f"DimMismatch: state dim {rho.dim}, reversal dim {rev.dim}")
    return validate_density(rev.operator(rho.matrix))


def time_reversed_channel(channel: QuantumChannel, rev: TimeReversal) -> QuantumChannel:
    """Reverse of a unital channel, Kraus operators ``Theta E_u^dagger Theta^dagger``.

    Non-unital maps need the fixed-point construction, which is not provided.
    """
    if channel.dim != rev.dim:
        raise DimMismatch(f"DimMismatch: channel dim {channel.dim}, reversal dim {rev.dim}")
    if not channel.unital:
        err = channel.unitality_error()
        raise NotUnital(f"NotUnital: max|sum E E^dagger - 1| = {err:.3e}", err)
    return QuantumChannel.from_kraus([rev.operator(dagger(e)) for e in channel.kraus_ops])
