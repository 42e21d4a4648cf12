"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]`` / ``[FAIL]`` line through
``record_criterion``; the lines are repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import hadamard_spec, random_spec, record_criterion
from qirrev.channels import QuantumChannel
from qirrev.charfunc import U_TEST_GRID, EstimationPlan, estimate_g, g_direct, g_from_distribution
from qirrev.ensembles import random_unitary
from qirrev.gaussian import (
    GaussianState,
    OscillatorBath,
    PhaseSpaceGrid,
    current_j,
    entropy_flux,
    entropy_production_rate,
    evolve,
    vn_rates,
    wigner_entropy_quadrature,
)
from qirrev.hilbert import ProjectiveObservable
from qirrev.twotime import ProtocolSpec, arrow_posterior, check_inequality, mean_sigma, run_protocol, sigma_general


def _sigma(spec):
    run = run_protocol(spec)
    return run, sigma_general(run.p_forward, run.p_backward)


def test_criterion_1_fluctuation_theorem(random_specs):
    start = time.perf_counter()
    worst = 0.0
    for spec in random_specs:
        _, d = _sigma(spec)
        worst = max(worst, abs(math.fsum(d.probabilities * np.exp(-d.sigmas)) - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 10
    record_criterion("1", ok, f"max |<exp(-sigma)> - 1| = {worst:.2e} over 100 specs, {elapsed:.2f}s")
    assert ok


def test_criterion_2_characteristic_function(random_specs):
    start = time.perf_counter()
    worst = 0.0
    for spec in random_specs:
        run, d = _sigma(spec)
        for u in U_TEST_GRID:
            worst = max(worst, abs(g_direct(run, spec.channel, u) - g_from_distribution(d, u)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 30
    record_criterion("2", ok, f"max |G_direct - G_dist| = {worst:.2e} on {len(U_TEST_GRID)} u values, {elapsed:.2f}s")
    assert ok


def _commuting_variant(spec):
    """Same channel and input, final basis = eigenbasis of rho_fin."""
    run = run_protocol(spec)
    _, vecs = np.linalg.eigh(run.rho_fin.matrix)
    return ProtocolSpec(spec.rho0, spec.obs_in, spec.channel, ProjectiveObservable.from_basis(vecs))


def test_criterion_3_inequality_suite(random_specs):
    rng = np.random.default_rng(3)
    general = 0.0
    for spec in random_specs:
        run, d = _sigma(spec)
        rep = check_inequality(run, d)
        general = max(general, -rep.relent, rep.relent - rep.mean_sigma)

    commuting_relent = commuting_gap = 0.0
    flagged = 0
    for spec in random_specs[:30]:
        cspec = _commuting_variant(spec)
        run, d = _sigma(cspec)
        rep = check_inequality(run, d)
        flagged += rep.commuting_case
        commuting_relent = max(commuting_relent, rep.relent)
        commuting_gap = max(commuting_gap, abs(rep.mean_sigma - rep.entropy_change))

    unitary_gap = 0.0
    for _ in range(30):
        base = random_spec(rng)
        unitary = QuantumChannel.from_unitary(random_unitary(base.dim, rng))
        spec = ProtocolSpec(base.rho0, base.obs_in, unitary, base.obs_fin)
        run, d = _sigma(spec)
        unitary_gap = max(unitary_gap, abs(check_inequality(run, d).relent - mean_sigma(d)))

    worst = max(general, commuting_relent, commuting_gap, unitary_gap)
    ok = worst <= 1e-8 and flagged == 30
    record_criterion(
        "3",
        ok,
        f"bound slack {general:.1e}; commuting relent {commuting_relent:.1e}, "
        f"|<sigma>-dS| {commuting_gap:.1e}; unitary |S-<sigma>| {unitary_gap:.1e}",
    )
    assert ok


def test_criterion_4a_qubit_benchmark():
    spec = hadamard_spec()
    run, d = _sigma(spec)
    ms = mean_sigma(d)
    atoms = sorted(zip(d.sigmas, d.probabilities))
    expected = sorted([(math.log(1.8), 0.9), (math.log(0.2), 0.1)])
    atoms_ok = len(atoms) == 2 and all(
        abs(s - es) <= 1e-12 and abs(p - ep) <= 1e-12 for (s, p), (es, ep) in zip(atoms, expected)
    )
    jar = math.fsum(d.probabilities * np.exp(-d.sigmas))
    ok = abs(ms - 0.368064) <= 1e-6 and atoms_ok and abs(jar - 1) <= 1e-12
    record_criterion("4a", ok, f"<sigma> = {ms:.9f}, atoms ok = {atoms_ok}, |jarzynski - 1| = {abs(jar - 1):.1e}")
    assert ok


def test_criterion_4b_posterior_value():
    # The logistic of <sigma> = 0.368064 is 0.590991; the listed target 0.591007
    # would need Sigma = 0.36813. Evaluated as stated and left red.
    _, d = _sigma(hadamard_spec())
    pf, _ = arrow_posterior(mean_sigma(d))
    ok = abs(pf - 0.591007) <= 1e-6
    record_criterion(
        "4b", ok, f"posterior P_F(<sigma>) = {pf:.9f}, target 0.591007 +- 1e-6 (off by {abs(pf - 0.591007):.2e})"
    )
    assert ok


def test_criterion_5_estimation_protocol():
    spec = hadamard_spec()
    start = time.perf_counter()
    inside = total = 0
    gamma_zero_exact = True
    counts_ok = True
    for seed in range(50):
        for p in estimate_g(spec, EstimationPlan(shots=100_000, seed=seed)):
            total += 1
            inside += abs(p.g_estimate - p.g_exact) <= 4 * p.stderr
            if p.gamma == 0.0:
                gamma_zero_exact &= p.g_estimate == 1.0
            counts_ok &= p.record.measurement_count == len(spec.obs_in) + len(spec.obs_fin)
    elapsed = time.perf_counter() - start
    frac = inside / total
    ok = frac >= 0.99 and gamma_zero_exact and counts_ok and elapsed < 120
    record_criterion(
        "5",
        ok,
        f"{inside}/{total} = {frac:.3f} within 4 stderr; gamma=0 exact: {gamma_zero_exact}; "
        f"count K+M: {counts_ok}; {elapsed:.1f}s",
    )
    assert ok


def test_criterion_6_gaussian_balance():
    start = time.perf_counter()
    bath = OscillatorBath(gamma=1.0, nbar=1.0, omega=2.0)
    dt, steps = 0.001, 3000
    traj = evolve(GaussianState(1 + 1j, 2.5 * np.eye(2)), bath, dt, steps)
    # five-point derivative of the quadrature Wigner entropy along the RK4 trajectory
    indices = np.linspace(2, steps - 2, 20).astype(int)
    worst = 0.0
    for i in indices:
        window = [traj[j] for j in range(i - 2, i + 3)]
        grid = PhaseSpaceGrid.for_state(traj[i], points_per_axis=256)
        s = [wigner_entropy_quadrature(st, grid) for st in window]
        ds = (s[0] - 8 * s[1] + 8 * s[3] - s[4]) / (12 * dt)
        pi = entropy_production_rate(traj[i], bath, grid)
        phi = entropy_flux(traj[i], bath)
        worst = max(worst, abs(ds - (pi - phi)) / abs(ds))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed < 60
    record_criterion("6", ok, f"max relative |dS_W/dt - (Pi - Phi)| = {worst:.2e} at 20 times, {elapsed:.1f}s")
    assert ok


def test_criterion_7_zero_temperature_contrast():
    state = GaussianState.thermal(1.0)
    cold = OscillatorBath(gamma=1.0, nbar=0.0, omega=1.0, beta=math.inf)
    phi0 = entropy_flux(state, cold)
    pi0 = entropy_production_rate(state, cold)
    markers = vn_rates(state, cold) == (math.inf, math.inf)
    nbars = (0.1, 0.01, 0.001)
    phi_vn = [vn_rates(state, OscillatorBath(1.0, n, 1.0))[1] for n in nbars]
    phi_w = [entropy_flux(state, OscillatorBath(1.0, n, 1.0)) for n in nbars]
    increasing = all(a < b for a, b in zip(phi_vn, phi_vn[1:]))
    spread = (max(phi_w) - min(phi_w)) / max(phi_w)
    ok = phi0 == 2.0 and math.isfinite(pi0) and pi0 >= 0 and markers and increasing and spread < 0.05
    # Phi_W = g (N - nbar) / (nbar + 1/2) gives 1.5, 1.94, 1.99 here: a 25% spread
    record_criterion(
        "7",
        ok,
        f"phi_wigner(0) = {phi0!r}, pi_wigner(0) = {pi0:.4f}, inf markers: {markers}; "
        f"phi_vn = {[round(v, 3) for v in phi_vn]} increasing: {increasing}; "
        f"phi_wigner = {[round(v, 4) for v in phi_w]} spread {spread:.1%} (needs < 5%)",
    )
    assert ok


def test_criterion_8_fixed_point_nullity():
    bath = OscillatorBath(gamma=1.0, nbar=1.0, omega=2.0)
    thermal = bath.fixed_point()
    grid = PhaseSpaceGrid.for_state(thermal, points_per_axis=256)
    pi = entropy_production_rate(thermal, bath, grid)
    x, p, _ = grid.mesh()
    jmax = float(np.max(np.abs(current_j(thermal, bath, x, p))))
    traj = evolve(thermal, bath, 0.001, 2000)
    drift = max(max(np.max(np.abs(s.cov - thermal.cov)), abs(s.mean)) for s in traj)
    ok = pi <= 1e-8 and jmax <= 1e-12 and drift <= 1e-10
    record_criterion("8", ok, f"Pi = {pi:.1e}, max|J| = {jmax:.1e}, trajectory drift = {drift:.1e}")
    assert ok


def test_criterion_9_arrow_posterior():
    half = arrow_posterior(0.0)[0] == 0.5
    grid = np.linspace(-40, 40, 4001)
    vals = np.array([arrow_posterior(s)[0] for s in grid])
    monotone = bool(np.all(np.diff(vals) >= 0)) and bool(np.all(np.diff(vals)[np.abs(grid[1:]) < 30] > 0))
    sym = max(abs(arrow_posterior(s)[0] + arrow_posterior(-s)[0] - 1.0) for s in grid)
    ok = half and monotone and sym <= 1e-15
    record_criterion("9", ok, f"P_F(0) = 1/2: {half}; monotone: {monotone}; max |P_F(S) + P_F(-S) - 1| = {sym:.1e}")
    assert ok


@pytest.fixture(autouse=True)
def _show(capsys):
    # let the PASS/FAIL line reach the terminal even without -s
    yield
    out = capsys.readouterr().out
    with capsys.disabled():
        print(out, end="")
