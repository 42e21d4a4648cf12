import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_spec, z_basis
from qirrev.channels import QuantumChannel, identity_channel
from qirrev.charfunc import (
    U_TEST_GRID,
    EstimationPlan,
    estimate_g,
    exact_expansion,
    g_direct,
    g_from_distribution,
    jarzynski_check,
    moments_from_distribution,
    prepared_state,
)
from qirrev.errors import DegenerateSampling, NotUnital, SingularPower
from qirrev.hilbert import pure_state, validate_density
from qirrev.twotime import ProtocolSpec, run_protocol, sigma_general

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def dist(spec):
    run = run_protocol(spec)
    return run, sigma_general(run.p_forward, run.p_backward)


class TestClosedForm:
    def test_origin(self, had_spec):
        run, d = dist(had_spec)
        assert g_direct(run, had_spec.channel, 0) == 1
        assert g_from_distribution(d, 0) == 1

    def test_imaginary_unit_is_jarzynski(self, had_spec):
        run, d = dist(had_spec)
        assert g_direct(run, had_spec.channel, 1j) == pytest.approx(1.0, abs=1e-12)
        assert jarzynski_check(d) == pytest.approx(1.0, abs=1e-12)

    def test_half_imaginary_hand_value(self, had_spec):
        run, d = dist(had_spec)
        oracle = 0.9 * 1.8**-0.5 + 0.1 * 0.2**-0.5
        assert g_direct(run, had_spec.channel, 0.5j) == pytest.approx(oracle, abs=1e-12)
        assert g_from_distribution(d, 0.5j) == pytest.approx(oracle, abs=1e-12)

    def test_agrees_with_distribution(self, random_specs):
        for spec in random_specs[:30]:
            run, d = dist(spec)
            for u in U_TEST_GRID:
                assert g_direct(run, spec.channel, u) == pytest.approx(g_from_distribution(d, u), abs=1e-9)

    def test_non_unital(self, had_spec):
        run, _ = dist(had_spec)
        damping = QuantumChannel.from_kraus(
            [np.array([[1, 0], [0, math.sqrt(0.5)]]), np.array([[0, math.sqrt(0.5)], [0, 0]])]
        )
        with pytest.raises(NotUnital):
            g_direct(run, damping, 0.3)

    def test_first_moment_by_differencing(self, had_spec):
        run, d = dist(had_spec)
        h = 1e-4
        deriv = (g_direct(run, had_spec.channel, h) - g_direct(run, had_spec.channel, -h)) / (2 * h)
        assert (-1j * deriv).real == pytest.approx(moments_from_distribution(d, 1), abs=1e-6)
        assert abs((-1j * deriv).imag) <= 1e-6

    def test_second_moment(self, had_spec):
        _, d = dist(had_spec)
        oracle = 0.9 * math.log(1.8) ** 2 + 0.1 * math.log(0.2) ** 2
        assert moments_from_distribution(d, 2) == pytest.approx(oracle, abs=1e-12)
        with pytest.raises(ValueError):
            moments_from_distribution(d, 0)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, u=st.floats(-20, 20))
    def test_bounded_on_real_axis(self, seed, u):
        spec = random_spec(np.random.default_rng(seed))
        run, d = dist(spec)
        assert abs(g_direct(run, spec.channel, u)) <= 1 + 1e-9
        assert abs(g_from_distribution(d, u)) <= 1 + 1e-12


class TestPreparedState:
    def test_gamma_zero(self):
        rho = validate_density(np.diag([0.9, 0.1]))
        state, norm = prepared_state(rho, 0.0)
        assert norm == 1.0
        np.testing.assert_allclose(state.matrix, rho.matrix, atol=1e-15)

    def test_gamma_half(self):
        rho = validate_density(np.diag([0.9, 0.1]))
        state, norm = prepared_state(rho, 0.5)
        assert norm == pytest.approx(math.sqrt(0.9) + math.sqrt(0.1))
        np.testing.assert_allclose(np.diag(state.matrix).real, np.array([math.sqrt(0.9), math.sqrt(0.1)]) / norm)


class TestEstimator:
    def test_gamma_zero_exact(self, had_spec):
        pts = estimate_g(had_spec, EstimationPlan(gammas=(0.0,), shots=137, seed=3))
        assert pts[0].g_estimate == 1.0

    def test_gamma_one_noise_free(self, random_specs):
        for spec in random_specs[:20]:
            run = run_protocol(spec)
            assert exact_expansion(spec, run, 1.0) == pytest.approx(1.0, abs=1e-10)

    def test_noise_free_limit_matches_closed_form(self, random_specs):
        for spec in random_specs[:20]:
            run = run_protocol(spec)
            for gamma in (-0.5, 0.25, 0.5, 0.75):
                exact = g_direct(run, spec.channel, 1j * gamma).real
                assert exact_expansion(spec, run, gamma) == pytest.approx(exact, rel=1e-9)

    def test_deterministic(self, had_spec):
        plan = EstimationPlan(shots=5000, seed=11)
        a = [p.as_row() for p in estimate_g(had_spec, plan)]
        b = [p.as_row() for p in estimate_g(had_spec, plan)]
        assert a == b
        c = [p.as_row() for p in estimate_g(had_spec, EstimationPlan(shots=5000, seed=12))]
        assert a != c

    def test_measurement_count(self, had_spec):
        for p in estimate_g(had_spec, EstimationPlan(shots=100, seed=1)):
            assert p.record.measurement_count == 4
            assert p.record.shots == 100

    def test_within_error_bars(self, had_spec):
        for p in estimate_g(had_spec, EstimationPlan(shots=100_000, seed=7)):
            assert abs(p.g_estimate - p.g_exact) <= 4 * p.stderr + 1e-15

    def test_stderr_scaling(self):
        # the Hadamard case sits at p = q = 1/2 where first-order noise cancels (1/N, not 1/sqrt N)
        spec = random_spec(np.random.default_rng(31), dim=3)
        ratios = []
        for seed in range(4):
            errs = []
            for shots in (1000, 4000, 16000):
                (pt,) = estimate_g(spec, EstimationPlan(gammas=(0.5,), shots=shots, seed=seed))
                errs.append(pt.stderr)
            ratios += [errs[0] / errs[1], errs[1] / errs[2]]
        assert np.mean(ratios) == pytest.approx(2.0, rel=0.3)

    def test_degenerate_sampling_skips(self):
        spec = ProtocolSpec(pure_state([1, 0]), z_basis(), identity_channel(2), z_basis())
        skipped = []
        with pytest.warns(RuntimeWarning, match="DegenerateSampling"):
            pts = estimate_g(spec, EstimationPlan(gammas=(-0.5, 0.5), shots=1000, seed=0), skipped)
        assert [p.gamma for p in pts] == [0.5]
        assert skipped and skipped[0][0] == -0.5
        assert DegenerateSampling.__name__ in skipped[0][1]

    def test_singular_power(self):
        spec = ProtocolSpec(pure_state([1, 0]), z_basis(), identity_channel(2), z_basis())
        with pytest.raises(SingularPower):
            estimate_g(spec, EstimationPlan(gammas=(1.0,), shots=10, seed=0))

    def test_rank_deficient_fine_below_one(self):
        spec = ProtocolSpec(pure_state([1, 0]), z_basis(), identity_channel(2), z_basis())
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            (pt,) = estimate_g(spec, EstimationPlan(gammas=(0.5,), shots=1000, seed=0))
        assert pt.g_estimate == pytest.approx(pt.g_exact)

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            EstimationPlan(shots=0)
        with pytest.raises(ValueError):
            EstimationPlan(gammas=(math.nan,))
