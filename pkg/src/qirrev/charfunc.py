"""Characteristic function of the entropy-production distribution.

``G(u) = sum_j p_j exp(i u sigma_j)`` has the closed form
``Tr[rho_tau**(-iu) Phi(rho_in**(1+iu))]`` for unital maps.  Along the
imaginary axis, ``G(i gamma)`` can be estimated from population
measurements alone; :func:`estimate_g` emulates that procedure with
finite shot noise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channels import QuantumChannel
from .errors import DegenerateSampling, NotUnital, SingularPower
from .hilbert import DensityOperator, matrix_power, validate_density
from .twotime import ProtocolRun, ProtocolSpec, SigmaDistribution, run_forward

DEFAULT_GAMMAS = (-0.5, 0.0, 0.25, 0.5, 0.75, 1.0)
BOOTSTRAP_RESAMPLES = 200
U_TEST_GRID = (0.0, 0.5, -0.5, 1.0, -1.0, 1j, 0.5j, 1.0 + 1.0j)


@dataclass(frozen=True)
class CharFuncPoint:
    u: complex
    value: complex


def g_direct(run: ProtocolRun, channel: QuantumChannel, u: complex) -> complex:
    if not channel.unital:
        raise NotUnital("NotUnital: the closed form holds for unital channels only", channel.unitality_error())
    u = complex(u)
    if u == 0:
        # Tr Phi(rho_in) = 1 for any trace-preserving map
        return 1.0 + 0.0j
    left = matrix_power(run.rho_tau, -1j * u)
    right = channel.map(matrix_power(run.rho_in, 1.0 + 1j * u))
    return complex(np.sum(left.T * right))


def g_from_distribution(d: SigmaDistribution, u: complex) -> complex:
    u = complex(u)
    if u == 0:
        return 1.0 + 0.0j
    return complex(np.sum(d.probabilities * np.exp(1j * u * d.sigmas)))


def jarzynski_check(d: SigmaDistribution) -> float:
    """``<exp(-sigma)>``; equals one for unital two-time protocols."""
    return math.fsum(a.probability * math.exp(-a.sigma) for a in d.atoms)


def moments_from_distribution(d: SigmaDistribution, n: int) -> float:
    if n < 1:
        raise ValueError(f"moment order must be positive, got {n}")
    return math.fsum(a.probability * a.sigma**n for a in d.atoms)


@dataclass(frozen=True)
class EstimationPlan:
    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    shots: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if not all(math.isfinite(g) for g in self.gammas):
            raise ValueError("gammas must be finite")
        if int(self.shots) < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ShotRecord:
    """Population counts collected for one value of gamma.

    ``occupation_counts_in`` are initial-basis populations of ``rho_in``;
    ``occupation_counts_fin`` are final-basis populations of ``Phi(rho_in)``
    (estimating ``p(a_fin_k)``); ``occupation_counts_evolved`` are final-basis
    populations of ``Phi(rho_in(gamma))``.
    """

    gamma: float
    occupation_counts_in: np.ndarray
    occupation_counts_fin: np.ndarray
    occupation_counts_evolved: np.ndarray
    normalization: float

    @property
    def shots(self) -> int:
        return int(self.occupation_counts_fin.sum())

    @property
    def measurement_count(self) -> int:
        """Distinct single-time population observables read out: M + K."""
        return len(self.occupation_counts_in) + len(self.occupation_counts_fin)


@dataclass(frozen=True)
class EstimatePoint:
    gamma: float
    g_estimate: float
    g_exact: float
    stderr: float
    record: ShotRecord

    def as_row(self) -> tuple[float, float, float, float]:
        return (self.gamma, self.g_estimate, self.g_exact, self.stderr)


def _population_probs(obs, rho: np.ndarray) -> np.ndarray:
    p = np.clip(np.array([np.real(np.trace(pk @ rho)) for pk in obs.projectors]), 0.0, None)
    return p / p.sum()


def _combine(norm: float, p_hat: np.ndarray, q_counts: np.ndarray, shots: int, gamma: float) -> float:
    return norm * float(np.dot(p_hat**gamma, q_counts)) / shots


def prepared_state(rho_in: DensityOperator, gamma: float) -> tuple[DensityOperator, float]:
    """``rho_in**(1 - gamma) / Tr[rho_in**(1 - gamma)]`` and its normalisation."""
    powered = matrix_power(rho_in, 1.0 - gamma)
    norm = 1.0 if gamma == 0 else float(np.real(np.trace(powered)))
    return validate_density(powered / norm), norm


def estimate_g(spec: ProtocolSpec, plan: EstimationPlan, skipped: list | None = None) -> list[EstimatePoint]:
    """Estimate ``G(i gamma)`` from simulated population measurements.

    For each gamma, on its own random stream:

    1. sample ``shots`` initial-basis and final-basis populations of the
       plain run to get ``p_hat(a_fin_k)``;
    2. prepare ``rho_in(gamma)``, evolve it, and sample ``shots`` final-basis
       populations ``q_hat_k``;
    3. return ``Tr[rho_in**(1-gamma)] * sum_k p_hat_k**gamma * q_hat_k``.

    The standard error is a multinomial bootstrap over both count vectors.
    Points where ``gamma < 0`` meets an unobserved final outcome are
    skipped; each skip is issued as a warning and, if ``skipped`` is given,
    appended to it as ``(gamma, message)``.
    """
    run = run_forward(spec)
    shots = int(plan.shots)
    p_in_exact = _population_probs(spec.obs_in, run.rho_in.matrix)
    p_fin_exact = _population_probs(spec.obs_fin, run.rho_fin.matrix)
    streams = np.random.SeedSequence(int(plan.seed)).spawn(len(plan.gammas))
    points = []
    for gamma, stream in zip(plan.gammas, streams):
        rng = np.random.default_rng(stream)
        if gamma >= 1 and not run.rho_in.is_full_rank():
            raise SingularPower(f"SingularPower: gamma = {gamma} >= 1 needs a full-rank rho_in")
        counts_in = rng.multinomial(shots, p_in_exact)
        counts_fin = rng.multinomial(shots, p_fin_exact)
        prepared, norm = prepared_state(run.rho_in, gamma)
        q_exact = _population_probs(spec.obs_fin, spec.channel.map(prepared.matrix))
        counts_evolved = rng.multinomial(shots, q_exact)
        p_hat = counts_fin / shots
        if gamma < 0 and np.any(counts_fin == 0):
            err = DegenerateSampling(
                f"DegenerateSampling: gamma = {gamma} with an unobserved final outcome; point skipped"
            )
            warnings.warn(str(err), RuntimeWarning, stacklevel=2)
            if skipped is not None:
                skipped.append((gamma, str(err)))
            continue
        estimate = _combine(norm, p_hat, counts_evolved, shots, gamma)
        boot_p = rng.multinomial(shots, p_hat, size=BOOTSTRAP_RESAMPLES) / shots
        boot_q = rng.multinomial(shots, counts_evolved / shots, size=BOOTSTRAP_RESAMPLES)
        with np.errstate(divide="ignore"):
            boot = norm * np.sum(boot_p**gamma * boot_q, axis=1) / shots
        boot = boot[np.isfinite(boot)]
        stderr = float(np.std(boot, ddof=1)) if boot.size > 1 else math.inf
        exact = g_direct(run, spec.channel, 1j * gamma).real
        record = ShotRecord(gamma, counts_in, counts_fin, counts_evolved, norm)
        points.append(EstimatePoint(gamma, estimate, exact, stderr, record))
    return points


def exact_expansion(spec: ProtocolSpec, run: ProtocolRun, gamma: float) -> float:
    """Noise-free limit of the estimator (exact populations in place of counts)."""
    prepared, norm = prepared_state(run.rho_in, gamma)
    p_fin = _population_probs(spec.obs_fin, run.rho_fin.matrix)
    q = _population_probs(spec.obs_fin, spec.channel.map(prepared.matrix))
    with np.errstate(divide="ignore"):
        return norm * float(np.sum(np.where(q > 0, p_fin**gamma * q, 0.0)))
