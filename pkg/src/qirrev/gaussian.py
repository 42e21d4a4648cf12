"""Wigner-entropy production and flux for a damped harmonic oscillator.

Conventions: hbar = k_B = 1, ``alpha = (x + i p) / sqrt(2)``, vacuum
covariance ``I/2``.  ``W`` is the Wigner density in ``(x, p)``, normalised
to ``int W dx dp = 1``.  Phase-space integrals run over ``dx dp``, which is
the ``d^2 alpha`` measure applied to the alpha-normalised density; the
currents and rates below are invariant under that change of variables.

The thermal bath acts on ``W`` through a Fokker-Planck equation with linear
drift and constant diffusion, so Gaussian states stay Gaussian and the
moment equations

    d mu / dt = A mu,    dC/dt = A C + C A^T + D,
    A = [[-g/2, w], [-w, -g/2]],    D = g (nbar + 1/2) I

are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse, InvalidBath, InvalidGaussianState, UnstableStep

SYMMETRY_TOL = 1e-12
UNCERTAINTY_TOL = 1e-9
BETA_TOL = 1e-9
STEP_BOUND = 0.01
RICHARDSON_RTOL = 1e-4
RICHARDSON_ATOL = 1e-12
MASS_SIGMAS = 6.0
DEFAULT_GRID_SIGMAS = 10.0
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Single-mode Gaussian state: complex displacement ``mean`` and (x, p) covariance."""

    mean: complex
    cov: np.ndarray

    def __post_init__(self) -> None:
        cov = np.array(self.cov, dtype=float, copy=True)
        if cov.shape != (2, 2):
            raise InvalidGaussianState(f"covariance must be 2x2, got {cov.shape}")
        asym = abs(cov[0, 1] - cov[1, 0])
        if asym > SYMMETRY_TOL:
            raise InvalidGaussianState(f"covariance not symmetric ({asym:.3e})", asym)
        cov = 0.5 * (cov + cov.T)
        if not np.all(np.isfinite(cov)) or np.linalg.eigvalsh(cov)[0] <= 0:
            raise InvalidGaussianState("covariance not positive definite")
        det = float(np.linalg.det(cov))
        if det < 0.25 - UNCERTAINTY_TOL:
            raise InvalidGaussianState(f"uncertainty bound violated: det(cov) = {det:.6g} < 1/4", 0.25 - det)
        cov.flags.writeable = False
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", complex(self.mean))

    @classmethod
    def vacuum(cls) -> "GaussianState":
        return cls(0j, 0.5 * np.eye(2))

    @classmethod
    def thermal(cls, nbar: float, mean: complex = 0j) -> "GaussianState":
        return cls(mean, (nbar + 0.5) * np.eye(2))

    @classmethod
    def coherent(cls, alpha: complex) -> "GaussianState":
        return cls(alpha, 0.5 * np.eye(2))

    @classmethod
    def from_xp(cls, mean_xp, cov) -> "GaussianState":
        x, p = (float(v) for v in mean_xp)
        return cls(complex(x, p) / SQRT2, cov)

    @property
    def mean_xp(self) -> np.ndarray:
        return SQRT2 * np.array([self.mean.real, self.mean.imag])

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.cov))

    @property
    def symplectic_eigenvalue(self) -> float:
        return math.sqrt(self.det)

    @property
    def max_std(self) -> float:
        return math.sqrt(float(np.linalg.eigvalsh(self.cov)[-1]))


@dataclass(frozen=True)
class OscillatorBath:
    """Thermal bath of occupation ``nbar`` damping an oscillator of frequency ``omega`` at rate ``gamma``.

    ``beta`` is optional; ``math.inf`` marks zero temperature (``nbar == 0``).
    """

    gamma: float
    nbar: float
    omega: float = 0.0
    beta: float | None = None

    def __post_init__(self) -> None:
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise InvalidBath(f"damping rate must be positive, got {self.gamma}")
        if not (self.nbar >= 0 and math.isfinite(self.nbar)):
            raise InvalidBath(f"nbar must be a finite non-negative number, got {self.nbar}")
        if not math.isfinite(self.omega):
            raise InvalidBath("omega must be finite")
        if self.beta is not None:
            if math.isinf(self.beta):
                if self.nbar != 0:
                    raise InvalidBath("beta = inf requires nbar = 0")
            else:
                expected = 1.0 / math.expm1(self.beta * self.omega)
                if abs(self.nbar - expected) > BETA_TOL:
                    raise InvalidBath(
                        f"nbar = {self.nbar} inconsistent with beta*omega = {self.beta * self.omega} "
                        f"(expected {expected})",
                        abs(self.nbar - expected),
                    )

    @classmethod
    def from_temperature(cls, gamma: float, omega: float, beta: float) -> "OscillatorBath":
        nbar = 0.0 if math.isinf(beta) else 1.0 / math.expm1(beta * omega)
        return cls(gamma, nbar, omega, beta)

    @property
    def diffusion(self) -> float:
        """``nbar + 1/2``, the stationary quadrature variance."""
        return self.nbar + 0.5

    @property
    def beta_omega(self) -> float:
        """``beta * omega = ln(1 + 1/nbar)``; infinite at zero temperature."""
        if self.nbar == 0:
            return math.inf
        return math.log1p(1.0 / self.nbar)

    def drift_matrix(self) -> np.ndarray:
        g, w = self.gamma, self.omega
        return np.array([[-g / 2, w], [-w, -g / 2]])

    def diffusion_matrix(self) -> np.ndarray:
        return self.gamma * self.diffusion * np.eye(2)

    def fixed_point(self) -> GaussianState:
        return GaussianState.thermal(self.nbar)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Square grid ``[-L, L]^2`` with ``n`` points per axis."""

    half_extent: float
    points_per_axis: int = 256

    def __post_init__(self) -> None:
        if not self.half_extent > 0:
            raise GridTooCoarse(f"half_extent must be positive, got {self.half_extent}")
        if self.points_per_axis < 64:
            raise GridTooCoarse(f"need at least 64 points per axis, got {self.points_per_axis}")

    @classmethod
    def for_state(cls, state: GaussianState, points_per_axis: int = 256, sigmas: float = DEFAULT_GRID_SIGMAS):
        offset = float(np.max(np.abs(state.mean_xp)))
        return cls(offset + sigmas * state.max_std, points_per_axis)

    def axis(self, n: int | None = None) -> np.ndarray:
        return np.linspace(-self.half_extent, self.half_extent, n or self.points_per_axis)

    def mesh(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray, float]:
        ax = self.axis(n)
        x, p = np.meshgrid(ax, ax, indexing="ij")
        h = ax[1] - ax[0]
        return x, p, h * h

    def refined(self) -> "PhaseSpaceGrid":
        return PhaseSpaceGrid(self.half_extent, 2 * self.points_per_axis)

    def check_mass(self, state: GaussianState) -> None:
        need = float(np.max(np.abs(state.mean_xp))) + MASS_SIGMAS * state.max_std
        if self.half_extent < need:
            raise GridTooCoarse(
                f"GridTooCoarse: half_extent {self.half_extent:.4g} below mean offset + 6 sigma = {need:.4g}"
            )


def _centered(state: GaussianState, x, p) -> tuple[np.ndarray, np.ndarray]:
    mx, mp = state.mean_xp
    return np.asarray(x, dtype=float) - mx, np.asarray(p, dtype=float) - mp


def _precision_products(state: GaussianState, dx, dp) -> tuple[np.ndarray, np.ndarray]:
    """Components of ``C^{-1} (r - mu)``."""
    inv = np.linalg.inv(state.cov)
    return inv[0, 0] * dx + inv[0, 1] * dp, inv[1, 0] * dx + inv[1, 1] * dp


def wigner(state: GaussianState, x, p):
    """Gaussian Wigner density at ``(x, p)``; broadcasts over arrays."""
    dx, dp = _centered(state, x, p)
    gx, gp = _precision_products(state, dx, dp)
    quad = dx * gx + dp * gp
    return np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(state.det))


def wigner_entropy(state: GaussianState) -> float:
    """Differential entropy ``-int W ln W dx dp = ln(2 pi e sqrt(det C))``."""
    return math.log(2.0 * math.pi * math.e * math.sqrt(state.det))


def wigner_entropy_quadrature(state: GaussianState, grid: PhaseSpaceGrid) -> float:
    x, p, area = grid.mesh()
    w = wigner(state, x, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(w > 0, -w * np.log(w), 0.0)
    return float(np.sum(integrand) * area)


def mean_excitation(state: GaussianState) -> float:
    return 0.5 * float(np.trace(state.cov)) + abs(state.mean) ** 2 - 0.5


def _log_wigner_dalpha_conj(state: GaussianState, x, p) -> np.ndarray:
    """``d ln W / d alpha*`` with ``d/d alpha* = (d/dx + i d/dp) / sqrt 2``."""
    dx, dp = _centered(state, x, p)
    gx, gp = _precision_products(state, dx, dp)
    return -(gx + 1j * gp) / SQRT2


def _current_over_w(state: GaussianState, bath: OscillatorBath, x, p) -> np.ndarray:
    alpha = (np.asarray(x, dtype=float) + 1j * np.asarray(p, dtype=float)) / SQRT2
    return 0.5 * bath.gamma * (alpha + bath.diffusion * _log_wigner_dalpha_conj(state, x, p))


def current_j(state: GaussianState, bath: OscillatorBath, x, p):
    """Irreversible phase-space current ``(g/2) [alpha W + (nbar + 1/2) dW/d alpha*]``.

    Only the dissipator contributes; the Hamiltonian rotation is excluded.
    """
    return _current_over_w(state, bath, x, p) * wigner(state, x, p)


def dissipator_action(state: GaussianState, bath: OscillatorBath, x, p):
    """Dissipative part of ``dW/dt``: ``(g/2) div(r W) + (g/2)(nbar + 1/2) lap W``."""
    dx, dp = _centered(state, x, p)
    gx, gp = _precision_products(state, dx, dp)
    w = wigner(state, x, p)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    div_rw = w * (2.0 - (x * gx + p * gp))
    inv = np.linalg.inv(state.cov)
    lap_w = w * (gx**2 + gp**2 - np.trace(inv))
    return 0.5 * bath.gamma * div_rw + 0.5 * bath.gamma * bath.diffusion * lap_w


def entropy_flux(state: GaussianState, bath: OscillatorBath) -> float:
    """``g (N - nbar) / (nbar + 1/2)``; finite at zero temperature."""
    return bath.gamma * (mean_excitation(state) - bath.nbar) / bath.diffusion


def _production_integral(state: GaussianState, bath: OscillatorBath, grid: PhaseSpaceGrid, n: int) -> float:
    x, p, area = grid.mesh(n)
    w = wigner(state, x, p)
    # |J|^2 / W evaluated as W |J/W|^2 to avoid dividing by underflowed tails
    integrand = w * np.abs(_current_over_w(state, bath, x, p)) ** 2
    return 4.0 / (bath.gamma * bath.diffusion) * float(np.sum(integrand) * area)


def entropy_production_rate(state: GaussianState, bath: OscillatorBath, grid: PhaseSpaceGrid | None = None) -> float:
    """``4 / (g (nbar + 1/2)) int |J|^2 / W`` by grid quadrature.

    The integral is evaluated on ``n`` and ``2n`` points per axis; if the two
    disagree by more than ``1e-4`` relative the grid is rejected.  The finer
    value is returned.
    """
    if grid is None:
        grid = PhaseSpaceGrid.for_state(state)
    grid.check_mass(state)
    coarse = _production_integral(state, bath, grid, grid.points_per_axis)
    fine = _production_integral(state, bath, grid, 2 * grid.points_per_axis)
    if abs(fine - coarse) > RICHARDSON_RTOL * abs(fine) + RICHARDSON_ATOL:
        raise GridTooCoarse(
            f"GridTooCoarse: production rate {coarse!r} at n={grid.points_per_axis} vs {fine!r} at 2n"
        )
    return fine


def entropy_rate(state: GaussianState, bath: OscillatorBath) -> float:
    """Exact ``dS_W/dt = (1/2) Tr[C^{-1} dC/dt]`` along the moment flow."""
    return 0.5 * float(np.trace(np.linalg.solve(state.cov, covariance_derivative(state.cov, bath))))


def covariance_derivative(cov: np.ndarray, bath: OscillatorBath) -> np.ndarray:
    a = bath.drift_matrix()
    return a @ cov + cov @ a.T + bath.diffusion_matrix()


def evolve(state: GaussianState, bath: OscillatorBath, dt: float, steps: int) -> list[GaussianState]:
    """Fixed-step RK4 integration of the moment equations.

    Returns ``steps + 1`` states including the initial one.  Requires
    ``dt * max(gamma, |omega|) <= 0.01``.
    """
    rate = max(bath.gamma, abs(bath.omega))
    if not (dt > 0 and dt * rate <= STEP_BOUND + 1e-15):
        raise UnstableStep(f"UnstableStep: dt * max(gamma, omega) = {dt * rate:.4g} exceeds {STEP_BOUND}")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    a = bath.drift_matrix()

    def rhs(mu, cov):
        return a @ mu, covariance_derivative(cov, bath)

    mu = state.mean_xp
    cov = np.array(state.cov)
    traj = [state]
    for _ in range(steps):
        k1m, k1c = rhs(mu, cov)
        k2m, k2c = rhs(mu + 0.5 * dt * k1m, cov + 0.5 * dt * k1c)
        k3m, k3c = rhs(mu + 0.5 * dt * k2m, cov + 0.5 * dt * k2c)
        k4m, k4c = rhs(mu + dt * k3m, cov + dt * k3c)
        mu = mu + dt / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m)
        cov = cov + dt / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c)
        cov = 0.5 * (cov + cov.T)
        traj.append(GaussianState.from_xp(mu, cov))
    return traj


def von_neumann_entropy(state: GaussianState) -> float:
    """``(nu + 1/2) ln(nu + 1/2) - (nu - 1/2) ln(nu - 1/2)`` with ``nu = sqrt(det C)``."""
    nu = state.symplectic_eigenvalue
    lo = max(nu - 0.5, 0.0)
    s = (nu + 0.5) * math.log(nu + 0.5)
    if lo > 0:
        s -= lo * math.log(lo)
    return max(s, 0.0)


def vn_rates(state: GaussianState, bath: OscillatorBath) -> tuple[float, float]:
    """Relative-entropy production rate and Clausius flux ``beta * Phi_E``.

    ``phi = beta omega g (N - nbar)``; ``pi = dS_vN/dt + phi``.  Both are
    ``math.inf`` at zero temperature unless the state sits at the bath
    occupation.
    """
    n = mean_excitation(state)
    excess = n - bath.nbar
    if bath.nbar == 0:
        if abs(excess) <= UNCERTAINTY_TOL:
            return 0.0, 0.0
        return math.inf, math.inf
    phi = bath.beta_omega * bath.gamma * excess
    nu = state.symplectic_eigenvalue
    dnu_dt = nu * entropy_rate(state, bath)
    if nu - 0.5 <= 1e-12:
        if dnu_dt > 1e-15:
            return math.inf, phi
        ds = 0.0
    else:
        ds = math.log((nu + 0.5) / (nu - 0.5)) * dnu_dt
    return ds + phi, phi


@dataclass(frozen=True)
class RateReport:
    pi_wigner: float
    phi_wigner: float
    ds_dt: float
    pi_vn: float
    phi_vn: float
    tolerance: float

    @property
    def balance_residual(self) -> float:
        return self.ds_dt - (self.pi_wigner - self.phi_wigner)


def rate_report(state: GaussianState, bath: OscillatorBath, grid: PhaseSpaceGrid | None = None) -> RateReport:
    pi = entropy_production_rate(state, bath, grid)
    phi = entropy_flux(state, bath)
    ds = entropy_rate(state, bath)
    pi_vn, phi_vn = vn_rates(state, bath)
    tol = RICHARDSON_RTOL * max(abs(pi), abs(phi), abs(ds)) + RICHARDSON_ATOL
    return RateReport(pi, phi, ds, pi_vn, phi_vn, tol)
