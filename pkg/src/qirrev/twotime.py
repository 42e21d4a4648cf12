"""Two-time measurement protocol and stochastic entropy production.

Forward:  rho0 --{P_in}--> rho_in --Phi--> rho_fin --{P_fin}--> rho_tau
Backward: Theta rho_tau --{~P_fin}--> --~Phi--> --{~P_in}-->

Forward joints are indexed ``[k, m]`` (final, initial) and backward joints
``[m, k]``, so ``sigma[k, m] = ln(p_forward[k, m] / p_backward[m, k])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .channels import QuantumChannel, TimeReversal, reverse_state, time_reversed_channel
from .errors import DimMismatch, InequalityViolated, InfiniteSigma, NotUnital
from .hilbert import (
    DensityOperator,
    ProjectiveObservable,
    relative_entropy,
    validate_density,
    von_neumann_entropy,
)

ZERO_PROB = 1e-15
MERGE_TOL = 1e-9
NORM_TOL = 1e-9
INEQUALITY_TOL = 1e-8
COMMUTE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    rho0: DensityOperator
    obs_in: ProjectiveObservable
    channel: QuantumChannel
    obs_fin: ProjectiveObservable
    reversal: TimeReversal | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho0", validate_density(self.rho0))
        dims = {
            "rho0": self.rho0.dim,
            "obs_in": self.obs_in.dim,
            "channel": self.channel.dim,
            "obs_fin": self.obs_fin.dim,
        }
        if self.reversal is None:
            object.__setattr__(self, "reversal", TimeReversal.conjugation(self.rho0.dim))
        dims["reversal"] = self.reversal.dim
        if len(set(dims.values())) != 1:
            raise DimMismatch(f"DimMismatch: inconsistent dimensions {dims}")
        if not self.channel.unital:
            err = self.channel.unitality_error()
            raise NotUnital(f"NotUnital: protocol requires a unital channel (violation {err:.3e})", err)

    @property
    def dim(self) -> int:
        return self.rho0.dim


@dataclass(frozen=True, eq=False)
class ProtocolRun:
    p_forward: np.ndarray
    p_in: np.ndarray
    p_fin: np.ndarray
    rho_in: DensityOperator
    rho_fin: DensityOperator
    rho_tau: DensityOperator
    p_backward: np.ndarray | None = None

    def marginal_errors(self) -> tuple[float, float]:
        e_in = float(np.max(np.abs(self.p_forward.sum(axis=0) - self.p_in)))
        e_fin = float(np.max(np.abs(self.p_forward.sum(axis=1) - self.p_fin)))
        return e_in, e_fin


@dataclass(frozen=True)
class SigmaAtom:
    sigma: float
    probability: float
    outcome_pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SigmaDistribution:
    """Discrete law of sigma; atoms closer than ``1e-9`` are merged."""

    atoms: tuple[SigmaAtom, ...]

    @classmethod
    def from_cells(cls, cells: list[tuple[float, float, tuple[int, int]]]) -> "SigmaDistribution":
        """Build from ``(sigma, probability, (k, m))`` triples."""
        cells = sorted(cells, key=lambda c: c[0])
        atoms: list[SigmaAtom] = []
        group: list[tuple[float, float, tuple[int, int]]] = []

        def flush() -> None:
            if not group:
                return
            p = math.fsum(c[1] for c in group)
            s = math.fsum(c[0] * c[1] for c in group) / p
            atoms.append(SigmaAtom(s, p, tuple(c[2] for c in group)))
            group.clear()

        for c in cells:
            if group and c[0] - group[-1][0] > MERGE_TOL:
                flush()
            group.append(c)
        flush()
        total = math.fsum(a.probability for a in atoms)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"sigma distribution mass {total!r} differs from 1")
        return cls(tuple(atoms))

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([a.sigma for a in self.atoms])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([a.probability for a in self.atoms])

    def __len__(self) -> int:
        return len(self.atoms)


def run_forward(spec: ProtocolSpec) -> ProtocolRun:
    """Forward joint ``p[k, m] = Tr[P_fin_k Phi(P_in_m rho0 P_in_m)]`` and the protocol states."""
    rho0 = spec.rho0.matrix
    phi = spec.channel
    p_forward = np.empty((len(spec.obs_fin), len(spec.obs_in)))
    for m, pm in enumerate(spec.obs_in.projectors):
        evolved = phi.map(pm @ rho0 @ pm)
        for k, pk in enumerate(spec.obs_fin.projectors):
            p_forward[k, m] = np.real(np.trace(pk @ evolved))
    p_forward = np.clip(p_forward, 0.0, None)
    rho_in = spec.obs_in.measure(spec.rho0)
    rho_fin = phi(rho_in)
    rho_tau = spec.obs_fin.measure(rho_fin)
    return ProtocolRun(
        p_forward=p_forward,
        p_in=spec.obs_in.probabilities(spec.rho0),
        p_fin=spec.obs_fin.probabilities(rho_fin),
        rho_in=rho_in,
        rho_fin=rho_fin,
        rho_tau=rho_tau,
    )


def run_backward(spec: ProtocolSpec, rho_tau: DensityOperator) -> np.ndarray:
    """Backward joint ``p[m, k] = Tr[~P_in_m ~Phi(~P_ref_k ~rho_tau ~P_ref_k)]``."""
    rev = spec.reversal
    rho_rev = reverse_state(rho_tau, rev).matrix
    phi_rev = time_reversed_channel(spec.channel, rev)
    ref = rev.observable(spec.obs_fin)
    back_in = rev.observable(spec.obs_in)
    p_backward = np.empty((len(back_in), len(ref)))
    for k, pk in enumerate(ref.projectors):
        evolved = phi_rev.map(pk @ rho_rev @ pk)
        for m, pm in enumerate(back_in.projectors):
            p_backward[m, k] = np.real(np.trace(pm @ evolved))
    return np.clip(p_backward, 0.0, None)


def run_protocol(spec: ProtocolSpec) -> ProtocolRun:
    """Forward run with the backward joint attached."""
    fwd = run_forward(spec)
    return ProtocolRun(
        p_forward=fwd.p_forward,
        p_in=fwd.p_in,
        p_fin=fwd.p_fin,
        rho_in=fwd.rho_in,
        rho_fin=fwd.rho_fin,
        rho_tau=fwd.rho_tau,
        p_backward=run_backward(spec, fwd.rho_tau),
    )


def sigma_general(p_forward: np.ndarray, p_backward: np.ndarray) -> SigmaDistribution:
    p_forward = np.asarray(p_forward, dtype=float)
    p_backward = np.asarray(p_backward, dtype=float)
    if p_forward.shape != p_backward.T.shape:
        raise DimMismatch(f"DimMismatch: forward {p_forward.shape} vs backward {p_backward.shape}")
    cells = []
    for (k, m), pf in np.ndenumerate(p_forward):
        if pf <= ZERO_PROB:
            continue
        pb = p_backward[m, k]
        if pb <= ZERO_PROB:
            raise InfiniteSigma(
                f"InfiniteSigma: forward probability {pf:.3e} at (k={k}, m={m}) has no backward counterpart",
                (k, m),
            )
        cells.append((math.log(pf / pb), pf, (k, m)))
    return SigmaDistribution.from_cells(cells)


def sigma_unital(p_in: np.ndarray, p_fin: np.ndarray, p_forward: np.ndarray) -> SigmaDistribution:
    """``sigma[k, m] = ln(p_in[m] / p_fin[k])`` weighted by the forward joint.

    Coincides with :func:`sigma_general` for unital maps and rank-one
    observables.
    """
    p_in = np.asarray(p_in, dtype=float)
    p_fin = np.asarray(p_fin, dtype=float)
    p_forward = np.asarray(p_forward, dtype=float)
    if p_forward.shape != (p_fin.size, p_in.size):
        raise DimMismatch(f"DimMismatch: forward {p_forward.shape} vs marginals ({p_fin.size}, {p_in.size})")
    cells = []
    for (k, m), pf in np.ndenumerate(p_forward):
        if pf <= ZERO_PROB:
            continue
        if p_fin[k] <= ZERO_PROB or p_in[m] <= ZERO_PROB:
            raise InfiniteSigma(f"InfiniteSigma: vanishing marginal at (k={k}, m={m})", (k, m))
        cells.append((math.log(p_in[m] / p_fin[k]), pf, (k, m)))
    return SigmaDistribution.from_cells(cells)


def mean_sigma(d: SigmaDistribution) -> float:
    return math.fsum(a.probability * a.sigma for a in d.atoms)


@dataclass(frozen=True)
class InequalityReport:
    relent: float
    mean_sigma: float
    commuting_case: bool
    entropy_change: float
    checks: dict = field(default_factory=dict)


def check_inequality(run: ProtocolRun, d: SigmaDistribution) -> InequalityReport:
    """Verify ``0 <= S(rho_fin || rho_tau) <= <sigma>``.

    When the final observable commutes with ``rho_fin`` (equivalently
    ``rho_tau == rho_fin``) the relative entropy must vanish and
    ``<sigma>`` must equal ``S(rho_fin) - S(rho_in)``.
    """
    relent = relative_entropy(run.rho_fin, run.rho_tau)
    ms = mean_sigma(d)
    ds = von_neumann_entropy(run.rho_fin) - von_neumann_entropy(run.rho_in)
    commuting = float(np.max(np.abs(run.rho_fin.matrix - run.rho_tau.matrix))) <= COMMUTE_TOL
    checks = {"relent_nonnegative": relent >= -INEQUALITY_TOL, "relent_below_mean": relent <= ms + INEQUALITY_TOL}
    if commuting:
        checks["relent_vanishes"] = relent <= INEQUALITY_TOL
        checks["mean_is_entropy_change"] = abs(ms - ds) <= INEQUALITY_TOL
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        raise InequalityViolated(
            f"InequalityViolated: {failed} (relent={relent!r}, mean_sigma={ms!r}, dS={ds!r})"
        )
    return InequalityReport(relent=relent, mean_sigma=ms, commuting_case=commuting, entropy_change=ds, checks=checks)


def arrow_posterior(total_sigma: float) -> tuple[float, float]:
    """Posterior probabilities of the forward and backward time direction.

    Flat prior; ``P_F = 1 / (1 + exp(-Sigma))``. The logistic is evaluated
    on ``|Sigma|`` and the complement taken by subtraction, which keeps
    ``P_F(S) + P_F(-S) == 1`` exact in floating point.
    """
    s = float(total_sigma)
    if not math.isfinite(s):
        raise ValueError(f"total entropy production must be finite, got {s}")
    hi = float(expit(abs(s)))
    lo = 1.0 - hi
    return (hi, lo) if s >= 0 else (lo, hi)
