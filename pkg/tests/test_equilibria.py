"""Newton solves, continuation and travelling-wave machinery."""

import math

import numpy as np
import pytest

from gks.spectral import GksParams, SpectralField, norms
from gks.equilibria import (Equilibrium, NewtonError, best_phase_residual,
                            continue_branch, dereplicate, find_pulse_wave,
                            harmonic_seed, newton_solve, project_samples,
                            replicate, residual_at, residual_tw, translate,
                            tw_target_coeffs)


class TestResidual:
    def test_zero_is_steady(self):
        p = GksParams(nu=0.5, N=16)
        r = residual_tw(SpectralField.zeros(16), 0.0, p, "steady")
        assert np.all(r == 0.0)

    def test_mean_is_pinned(self):
        p = GksParams(nu=0.5, N=16)
        u = SpectralField.from_modes(16, mean=2.5)
        assert residual_tw(u, 0.0, p, "steady")[0] == 2.5

    def test_unknown_mode_rejected(self):
        p = GksParams(nu=0.5, N=16)
        with pytest.raises(ValueError):
            residual_tw(SpectralField.zeros(16), 0.0, p, "wave")


class TestNewton:
    def test_converges_and_residual_small(self):
        p = GksParams(nu=0.5, N=32)
        eq = newton_solve((harmonic_seed(1, p), 0.0), p, "steady",
                          classify=False)
        assert residual_at(eq) < 1e-10
        assert eq.l2_norm() > 1.0          # nontrivial branch, not zero

    def test_translates_are_also_solutions(self):
        p = GksParams(nu=0.5, N=32)
        eq = newton_solve((harmonic_seed(1, p), 0.0), p, "steady",
                          classify=False)
        shifted = translate(eq.coeffs, 1.234)
        r = residual_tw(shifted, 0.0, p, "steady")
        assert np.max(np.abs(r)) < 1e-9

    def test_nonfinite_guess_rejected(self):
        p = GksParams(nu=0.5, N=16)
        bad = SpectralField(np.full(33, np.nan))
        with pytest.raises(NewtonError):
            newton_solve((bad, 0.0), p, "steady")

    def test_known_steady_state_norms(self, steady_01115, steady_035_mu03):
        # frozen regression values for the two reference states
        assert steady_01115.l2_norm() == pytest.approx(10.3834, abs=2e-3)
        assert steady_035_mu03.l2_norm() == pytest.approx(11.8178, abs=2e-3)
        assert residual_at(steady_01115) < 1e-10
        assert residual_at(steady_035_mu03) < 1e-10


class TestTranslate:
    def test_matches_pointwise_shift(self):
        rng = np.random.default_rng(2)
        u = SpectralField(rng.standard_normal(17))
        from gks.spectral import eval_physical
        x = np.linspace(0, 2 * np.pi, 32, endpoint=False)
        shifted = translate(u, 0.7)
        assert np.allclose(eval_physical(shifted, x),
                           eval_physical(u, x - 0.7), atol=1e-12)

    def test_best_phase_recovers_shift(self):
        rng = np.random.default_rng(4)
        u = SpectralField(rng.standard_normal(33))
        moved = translate(u, 1.5)
        resid, shift = best_phase_residual(moved.coeffs, u)
        assert resid < 1e-9
        assert shift == pytest.approx(1.5, abs=1e-6)


class TestContinuation:
    def test_branch_follows_parameter(self):
        p = GksParams(nu=0.5, N=32)
        seed = newton_solve((harmonic_seed(1, p), 0.0), p, "steady",
                            classify=False)
        branch = continue_branch(seed, "nu", 0.3, 0.05)
        vals = [v for v, _, _ in branch.samples]
        assert vals[0] == 0.5 and vals[-1] == pytest.approx(0.3)
        assert branch.termination == "completed"
        for v, eq, l2 in branch.samples:
            assert residual_at(eq) < 1e-9
            assert l2 == pytest.approx(eq.l2_norm())

    def test_record_values_sampled_exactly(self):
        p = GksParams(nu=0.5, N=32)
        seed = newton_solve((harmonic_seed(1, p), 0.0), p, "steady",
                            classify=False)
        branch = continue_branch(seed, "nu", 0.4, 0.03, record={0.444})
        assert any(abs(v - 0.444) < 1e-14 for v, _, _ in branch.samples)

    def test_bad_parameter_rejected(self):
        p = GksParams(nu=0.5, N=32)
        seed = newton_solve((harmonic_seed(1, p), 0.0), p, "steady",
                            classify=False)
        with pytest.raises(ValueError):
            continue_branch(seed, "viscosity", 0.3, 0.05)


class TestReplication:
    def test_replicate_dereplicate_roundtrip(self):
        p = GksParams(nu=0.5, N=32)
        eq = newton_solve((harmonic_seed(1, p), 0.0), p, "steady",
                          classify=False)
        rep = replicate(eq, 2, N=64)
        assert rep.params.nu == pytest.approx(0.125)
        back = dereplicate(rep, 2, 32)
        assert np.allclose(back.coeffs.coeffs, eq.coeffs.coeffs, atol=1e-12)

    def test_replicated_wave_still_solves(self):
        p = GksParams(nu=0.5, N=32)
        eq = newton_solve((harmonic_seed(1, p), 0.0), p, "steady",
                          classify=False)
        rep = replicate(eq, 2, N=64)
        r = residual_tw(rep.coeffs, rep.speed, rep.params, "steady")
        assert np.max(np.abs(r)) < 1e-8


class TestPulseWaves:
    def test_one_pulse_reference(self, pulse1):
        assert pulse1.speed == pytest.approx(10.4889, abs=2e-3)
        assert pulse1.l2_norm() == pytest.approx(15.43, abs=0.05)
        assert residual_at(pulse1) < 1e-9

    def test_multi_pulse_speeds(self):
        # frozen regression values for the pulse family at nu = 0.01
        assert find_pulse_wave(0.01, 0.0, 2).speed == pytest.approx(8.8157, abs=2e-3)
        assert find_pulse_wave(0.01, 0.0, 3).speed == pytest.approx(7.1101, abs=2e-3)

    def test_dispersive_pulse(self):
        eq = find_pulse_wave(0.01, 0.03, 1)
        assert eq.speed == pytest.approx(12.9092, abs=2e-3)
        assert residual_at(eq) < 1e-9

    def test_rotating_target(self, pulse1):
        # after time t the wave is the initial profile translated by c*t
        got = tw_target_coeffs(pulse1, 0.3)
        expect = translate(pulse1.coeffs, pulse1.speed * 0.3)
        assert np.allclose(got.coeffs, expect.coeffs, atol=1e-12)


class TestProjection:
    def test_project_samples_roundtrip(self):
        rng = np.random.default_rng(6)
        u = SpectralField(rng.standard_normal(17))
        from gks.spectral import eval_physical
        x = 2.0 * np.pi * np.arange(128) / 128
        back = project_samples(eval_physical(u, x), 8)
        assert np.allclose(back.coeffs, u.coeffs, atol=1e-12)
