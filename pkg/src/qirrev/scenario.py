"""Scenario configuration parsing and the three batch pipelines.

A scenario is a JSON document::

    {"schema_version": 1, "kind": "twotime" | "charfunc" | "gaussian",
     "seed": 0, "payload": {...}}

Complex matrices are nested lists whose entries are ``[re, im]`` pairs
(plain reals are accepted too).  See ``README.md`` for the payload schema.
"""

from __future__ import annotations

import math
import platform
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy

from . import __version__
from .channels import (
    CHANNEL_TOL,
    HamiltonianSchedule,
    QuantumChannel,
    TimeReversal,
    depolarizing_channel,
    dephasing_channel,
    identity_channel,
    unitary_from_schedule,
)
from .charfunc import (
    BOOTSTRAP_RESAMPLES,
    DEFAULT_GAMMAS,
    U_TEST_GRID,
    EstimationPlan,
    estimate_g,
    g_direct,
    g_from_distribution,
    jarzynski_check,
)
from .errors import ConfigError, ValidationError
from .gaussian import (
    RICHARDSON_RTOL,
    STEP_BOUND,
    GaussianState,
    OscillatorBath,
    PhaseSpaceGrid,
    evolve,
    mean_excitation,
    rate_report,
    wigner_entropy,
)
from .hilbert import SUPPORT_TOL, VALIDATION_TOL, ProjectiveObservable, dft_matrix, validate_density
from .twotime import (
    INEQUALITY_TOL,
    MERGE_TOL,
    ZERO_PROB,
    ProtocolSpec,
    arrow_posterior,
    check_inequality,
    mean_sigma,
    run_protocol,
    sigma_general,
    sigma_unital,
)

SCHEMA_VERSION = 1
KINDS = ("twotime", "charfunc", "gaussian")

TOLERANCES = {
    "density_validation": VALIDATION_TOL,
    "support_threshold": SUPPORT_TOL,
    "channel_trace_preservation": CHANNEL_TOL,
    "zero_probability": ZERO_PROB,
    "sigma_merge": MERGE_TOL,
    "inequality": INEQUALITY_TOL,
    "richardson_relative": RICHARDSON_RTOL,
    "integrator_step_bound": STEP_BOUND,
}


# ---------------------------------------------------------------------------
# parsing helpers


def parse_complex_matrix(obj: Any, what: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ConfigError(f"ConfigError: {what} must be a nested list of rows")
    rows = []
    for row in obj:
        vals = []
        for entry in row:
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                vals.append(complex(entry))
            elif (
                isinstance(entry, list)
                and len(entry) == 2
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)
            ):
                vals.append(complex(entry[0], entry[1]))
            else:
                raise ConfigError(f"ConfigError: {what} entries must be numbers or [re, im] pairs, got {entry!r}")
        rows.append(vals)
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(f"ConfigError: {what} is ragged")
    return np.array(rows, dtype=np.complex128)


def encode_complex_matrix(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a, dtype=np.complex128)]


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _require(block: dict, key: str, where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"ConfigError: {where} must be an object")
    if key not in block:
        raise ConfigError(f"ConfigError: missing '{key}' in {where}")
    return block[key]


def _number(value, what: str) -> float:
    if isinstance(value, str) and value.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"ConfigError: {what} must be a number, got {value!r}")
    return float(value)


def parse_observable(obj: Any, dim: int, what: str) -> ProjectiveObservable:
    labels = None
    if isinstance(obj, dict):
        labels = obj.get("labels")
        if "projectors" in obj:
            projs = [parse_complex_matrix(p, f"{what}.projectors[{i}]") for i, p in enumerate(obj["projectors"])]
            return ProjectiveObservable.from_projectors(projs, labels)
        obj = _require(obj, "basis", what)
    if isinstance(obj, str):
        if obj == "computational":
            basis = np.eye(dim)
        elif obj in ("hadamard", "fourier"):
            basis = dft_matrix(dim)
        else:
            raise ConfigError(f"ConfigError: unknown basis label {obj!r} for {what}")
    else:
        basis = parse_complex_matrix(obj, f"{what}.basis")
    return ProjectiveObservable.from_basis(basis, labels)


def parse_channel(obj: Any, dim: int) -> QuantumChannel:
    if not isinstance(obj, dict):
        raise ConfigError("ConfigError: channel must be an object")
    if "preset" in obj:
        name = obj["preset"]
        if name == "identity":
            return identity_channel(dim)
        if name == "dephasing":
            return dephasing_channel(dim, _number(obj.get("p", 1.0), "channel.p"))
        if name == "depolarizing":
            return depolarizing_channel(dim, _number(_require(obj, "p", "channel"), "channel.p"))
        raise ConfigError(f"ConfigError: unknown channel preset {name!r}")
    if "kraus" in obj:
        ops = obj["kraus"]
        if not isinstance(ops, list) or not ops:
            raise ConfigError("ConfigError: channel.kraus must be a non-empty list")
        return QuantumChannel.from_kraus([parse_complex_matrix(e, f"channel.kraus[{i}]") for i, e in enumerate(ops)])
    if "unitary" in obj:
        return QuantumChannel.from_unitary(parse_complex_matrix(obj["unitary"], "channel.unitary"))
    if "schedule" in obj:
        segs = obj["schedule"]
        if not isinstance(segs, list) or not segs:
            raise ConfigError("ConfigError: channel.schedule must be a non-empty list")
        parsed = []
        for i, seg in enumerate(segs):
            h = parse_complex_matrix(_require(seg, "hamiltonian", f"schedule[{i}]"), f"schedule[{i}].hamiltonian")
            parsed.append((h, _number(_require(seg, "duration", f"schedule[{i}]"), f"schedule[{i}].duration")))
        return unitary_from_schedule(HamiltonianSchedule.from_segments(parsed))
    raise ConfigError("ConfigError: channel needs one of 'preset', 'kraus', 'unitary', 'schedule'")


# ---------------------------------------------------------------------------
# scenario objects


@dataclass
class Scenario:
    kind: str
    seed: int
    raw: dict
    protocol: ProtocolSpec | None = None
    plan: EstimationPlan | None = None
    u_grid: tuple = U_TEST_GRID
    state: GaussianState | None = None
    bath: OscillatorBath | None = None
    dt: float = 0.0
    steps: int = 0
    sample_every: int = 1
    grid_points: int = 256
    grid_half_extent: float | None = None
    warnings: list = field(default_factory=list)


def _parse_protocol(payload: dict) -> ProtocolSpec:
    rho0 = parse_complex_matrix(_require(payload, "rho0", "payload"), "rho0")
    dim = int(payload.get("dim", rho0.shape[0]))
    if rho0.shape != (dim, dim):
        raise ConfigError(f"ConfigError: rho0 has shape {rho0.shape}, dim is {dim}")
    rho0 = validate_density(rho0)
    obs_in = parse_observable(_require(payload, "obs_in", "payload"), dim, "obs_in")
    obs_fin = parse_observable(_require(payload, "obs_fin", "payload"), dim, "obs_fin")
    channel = parse_channel(_require(payload, "channel", "payload"), dim)
    rev = payload.get("reversal")
    reversal = TimeReversal.conjugation(dim) if rev is None else TimeReversal.from_unitary(parse_complex_matrix(rev, "reversal"))
    return ProtocolSpec(rho0, obs_in, channel, obs_fin, reversal)


def _parse_gaussian(sc: Scenario, payload: dict) -> None:
    st = _require(payload, "state", "payload")
    mean = st.get("mean", [0.0, 0.0])
    if not (isinstance(mean, list) and len(mean) == 2):
        raise ConfigError("ConfigError: state.mean must be an [re, im] pair")
    cov = _require(st, "cov", "state")
    try:
        cov = np.array(cov, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"ConfigError: state.cov not numeric: {exc}") from None
    sc.state = GaussianState(complex(_number(mean[0], "mean.re"), _number(mean[1], "mean.im")), cov)
    b = _require(payload, "bath", "payload")
    beta = b.get("beta")
    sc.bath = OscillatorBath(
        _number(_require(b, "gamma", "bath"), "bath.gamma"),
        _number(_require(b, "nbar", "bath"), "bath.nbar"),
        _number(b.get("omega", 0.0), "bath.omega"),
        None if beta is None else _number(beta, "bath.beta"),
    )
    integ = payload.get("integration", {})
    sc.dt = _number(integ.get("dt", 0.001), "integration.dt")
    sc.steps = int(_number(integ.get("steps", 0), "integration.steps"))
    sc.sample_every = max(1, int(_number(integ.get("sample_every", 1), "integration.sample_every")))
    rate = max(sc.bath.gamma, abs(sc.bath.omega))
    if not (sc.dt > 0 and sc.dt * rate <= STEP_BOUND + 1e-15):
        raise ValidationError(f"UnstableStep: dt * max(gamma, omega) = {sc.dt * rate:.4g} exceeds {STEP_BOUND}")
    if sc.steps < 0:
        raise ConfigError("ConfigError: integration.steps must be non-negative")
    grid = payload.get("grid", {})
    sc.grid_points = int(_number(grid.get("points_per_axis", 256), "grid.points_per_axis"))
    if grid.get("half_extent") is not None:
        sc.grid_half_extent = _number(grid["half_extent"], "grid.half_extent")
    _grid_for(sc, sc.state).check_mass(sc.state)


def _grid_for(sc: Scenario, state: GaussianState) -> PhaseSpaceGrid:
    if sc.grid_half_extent is not None:
        return PhaseSpaceGrid(sc.grid_half_extent, sc.grid_points)
    return PhaseSpaceGrid.for_state(state, sc.grid_points)


def load_scenario(config: dict) -> Scenario:
    """Structural and invariant validation; no heavy computation."""
    if not isinstance(config, dict):
        raise ConfigError("ConfigError: top level must be an object")
    version = config.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"ConfigError: unsupported schema_version {version!r}")
    kind = _require(config, "kind", "config")
    if kind not in KINDS:
        raise ConfigError(f"ConfigError: kind must be one of {KINDS}, got {kind!r}")
    seed = config.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"ConfigError: seed must be an unsigned 64-bit integer, got {seed!r}")
    payload = _require(config, "payload", "config")
    sc = Scenario(kind=kind, seed=seed, raw=config)
    if kind in ("twotime", "charfunc"):
        sc.protocol = _parse_protocol(payload)
        if "u_grid" in payload:
            sc.u_grid = tuple(
                complex(*u) if isinstance(u, list) else complex(_number(u, "u_grid")) for u in payload["u_grid"]
            )
        if kind == "charfunc":
            try:
                sc.plan = EstimationPlan(
                    gammas=tuple(payload.get("gammas", DEFAULT_GAMMAS)),
                    shots=int(payload.get("shots", 100_000)),
                    seed=seed,
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"ConfigError: {exc}") from None
    else:
        _parse_gaussian(sc, payload)
    return sc


# ---------------------------------------------------------------------------
# pipelines


def _observable_echo(obs: ProjectiveObservable) -> dict:
    return {"labels": list(obs.labels), "projectors": [encode_complex_matrix(p) for p in obs.projectors]}


def scenario_echo(sc: Scenario) -> dict:
    """The configuration with presets expanded to explicit matrices."""
    echo = {"kind": sc.kind, "seed": sc.seed}
    if sc.protocol is not None:
        p = sc.protocol
        echo["payload"] = {
            "dim": p.dim,
            "rho0": encode_complex_matrix(p.rho0.matrix),
            "obs_in": _observable_echo(p.obs_in),
            "obs_fin": _observable_echo(p.obs_fin),
            "channel": {"kraus": [encode_complex_matrix(e) for e in p.channel.kraus_ops]},
            "reversal": encode_complex_matrix(p.reversal.basis_unitary),
        }
        if sc.plan is not None:
            echo["payload"].update(gammas=list(sc.plan.gammas), shots=sc.plan.shots)
    else:
        b = sc.bath
        echo["payload"] = {
            "state": {"mean": encode_complex(sc.state.mean), "cov": sc.state.cov.tolist()},
            "bath": {"gamma": b.gamma, "nbar": b.nbar, "omega": b.omega, "beta": b.beta},
            "integration": {"dt": sc.dt, "steps": sc.steps, "sample_every": sc.sample_every},
            "grid": {"points_per_axis": sc.grid_points, "half_extent": sc.grid_half_extent},
        }
    return echo


def _twotime_results(sc: Scenario) -> dict:
    spec = sc.protocol
    run = run_protocol(spec)
    dist = sigma_general(run.p_forward, run.p_backward)
    ineq = check_inequality(run, dist)
    ms = mean_sigma(dist)
    pf, pb = arrow_posterior(ms)
    out = {
        "p_forward": run.p_forward.tolist(),
        "p_backward": run.p_backward.tolist(),
        "p_in": run.p_in.tolist(),
        "p_fin": run.p_fin.tolist(),
        "sigma_atoms": [
            {"sigma": a.sigma, "probability": a.probability, "outcome_pairs": [list(c) for c in a.outcome_pairs]}
            for a in dist.atoms
        ],
        "mean_sigma": ms,
        "jarzynski": jarzynski_check(dist),
        "inequality": {
            "relent": ineq.relent,
            "mean_sigma": ineq.mean_sigma,
            "commuting_case": ineq.commuting_case,
            "entropy_change": ineq.entropy_change,
        },
        "posterior": {"total_sigma": ms, "p_forward_dir": pf, "p_backward_dir": pb},
        "g_points": [],
    }
    if spec.obs_in.is_rank_one() and spec.obs_fin.is_rank_one():
        d_unital = sigma_unital(run.p_in, run.p_fin, run.p_forward)
        out["sigma_unital_mean"] = mean_sigma(d_unital)
    else:
        sc.warnings.append("degenerate observables: unital shortcut for sigma not evaluated")
    for u in sc.u_grid:
        try:
            direct = g_direct(run, spec.channel, u)
        except ArithmeticError as exc:
            sc.warnings.append(f"g_direct skipped at u={u}: {exc}")
            direct = None
        out["g_points"].append(
            {
                "u": encode_complex(u),
                "direct": None if direct is None else encode_complex(direct),
                "distribution": encode_complex(g_from_distribution(dist, u)),
            }
        )
    return out


ESTIMATE_COLUMNS = ("gamma", "g_estimate", "g_exact", "stderr", "measurement_count")


def _charfunc_results(sc: Scenario) -> dict:
    out = _twotime_results(sc)
    skipped: list = []
    points = estimate_g(sc.protocol, sc.plan, skipped)
    out["estimates"] = [
        {
            "gamma": p.gamma,
            "g_estimate": p.g_estimate,
            "g_exact": p.g_exact,
            "stderr": p.stderr,
            "measurement_count": p.record.measurement_count,
            "normalization": p.record.normalization,
            "occupation_counts_in": p.record.occupation_counts_in.tolist(),
            "occupation_counts_fin": p.record.occupation_counts_fin.tolist(),
            "occupation_counts_evolved": p.record.occupation_counts_evolved.tolist(),
        }
        for p in points
    ]
    out["skipped"] = [{"gamma": g, "message": m} for g, m in skipped]
    sc.warnings.extend(m for _, m in skipped)
    return out


TRAJECTORY_COLUMNS = (
    "t",
    "mean_excitation",
    "wigner_entropy",
    "pi_wigner",
    "phi_wigner",
    "ds_dt",
    "pi_vn",
    "phi_vn",
    "balance_residual",
)


def _gaussian_results(sc: Scenario) -> dict:
    traj = evolve(sc.state, sc.bath, sc.dt, sc.steps)
    rows = []
    for i in range(0, len(traj), sc.sample_every):
        st = traj[i]
        rep = rate_report(st, sc.bath, _grid_for(sc, st))
        rows.append(
            {
                "t": i * sc.dt,
                "mean_excitation": mean_excitation(st),
                "wigner_entropy": wigner_entropy(st),
                "pi_wigner": rep.pi_wigner,
                "phi_wigner": rep.phi_wigner,
                "ds_dt": rep.ds_dt,
                "pi_vn": rep.pi_vn,
                "phi_vn": rep.phi_vn,
                "balance_residual": rep.balance_residual,
            }
        )
    final = traj[-1]
    return {
        "trajectory": rows,
        "final_state": {"mean": encode_complex(final.mean), "cov": final.cov.tolist()},
    }


PIPELINES = {"twotime": _twotime_results, "charfunc": _charfunc_results, "gaussian": _gaussian_results}


def run_scenario(sc: Scenario) -> dict:
    results = PIPELINES[sc.kind](sc)
    tolerances = dict(TOLERANCES)
    if sc.kind == "charfunc":
        tolerances["bootstrap_resamples"] = BOOTSTRAP_RESAMPLES
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": sc.kind,
        "seed": sc.seed,
        "scenario": scenario_echo(sc),
        "results": results,
        "diagnostics": {"tolerances": tolerances, "warnings": list(sc.warnings)},
        "versions": {
            "qirrev": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
