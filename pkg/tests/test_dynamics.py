"""Time stepping: exact linear oracles, convergence order, safeguards."""

import math

import numpy as np
import pytest

from gks.spectral import GksParams, SpectralField, linear_symbol
from gks.dynamics import (BLOWUP_LIMIT, BlowUpError, StepperConfig, Trajectory,
                          boundedness_ceiling, check_bounded, default_dt,
                          simulate, step_imex_bdf2)
from conftest import five_mode


def linear_exact(u0: SpectralField, p: GksParams, t: float) -> np.ndarray:
    """Exact solution of the linearised equation (diagonal in mode pairs)."""
    out = np.empty_like(u0.coeffs)
    out[0] = u0.coeffs[0]
    for n in range(1, u0.N + 1):
        lam = linear_symbol(n, p)
        growth = math.exp(lam.real * t)
        c, s = math.cos(lam.imag * t), math.sin(lam.imag * t)
        a, b = u0.sin(n), u0.cos(n)
        # pair rotation induced by the dispersive (imaginary) part
        out[2 * n - 1] = growth * (c * a - s * b)
        out[2 * n] = growth * (s * a + c * b)
    return out


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            StepperConfig(-1e-3, 1.0)
        with pytest.raises(ValueError):
            StepperConfig(1e-3, 1e-5)
        with pytest.raises(ValueError):
            StepperConfig(1e-3, 1.0, record_every=0)

    def test_default_dt(self):
        assert default_dt(0.5) == 1e-3
        assert default_dt(0.01) == 2.5e-4


class TestLinearOracle:
    @pytest.mark.parametrize("p", [GksParams(nu=0.4, N=8),
                                   GksParams(nu=0.3, mu=0.2, N=8),
                                   GksParams(nu=0.3, delta=0.5, N=8)])
    def test_small_amplitude_matches_exact_linear(self, p):
        # 1e-8 amplitudes make the quadratic term negligible (1e-16 level)
        eps = 1e-8
        u0 = SpectralField(eps * np.arange(1.0, 2 * p.N + 2))
        traj = simulate(u0, p, None, StepperConfig(1e-4, 0.5, record_every=5000))
        exact = linear_exact(u0, p, 0.5)
        err = np.linalg.norm(traj.states[-1] - exact)
        assert err < 1e-6 * np.linalg.norm(exact)

    def test_dispersion_rotates_pairs(self):
        # pure rotation case: pick the mode with zero real growth rate
        p = GksParams(nu=1.0, delta=1.0, N=8)
        u0 = SpectralField.from_modes(8, sines={1: 1e-8})
        traj = simulate(u0, p, None, StepperConfig(1e-4, 1.0, record_every=10000))
        exact = linear_exact(u0, p, 1.0)
        assert np.allclose(traj.states[-1], exact, atol=1e-14)

    def test_stable_decay(self):
        p = GksParams(nu=1.5, N=16)
        traj = simulate(five_mode(16), p, None, StepperConfig(1e-3, 20.0, 1000))
        # the mean is a conserved quantity; everything else decays
        assert traj.states[-1][0] == pytest.approx(1.0, abs=1e-8)
        assert np.linalg.norm(traj.states[-1][1:]) < 1e-2


class TestConvergence:
    def test_second_order_in_dt(self):
        p = GksParams(nu=0.5, N=16)
        u0 = five_mode(16)
        ref = simulate(u0, p, None, StepperConfig(1.25e-5, 0.5, 40000)).states[-1]
        errs = []
        for dt in (4e-4, 2e-4, 1e-4):
            got = simulate(u0, p, None,
                           StepperConfig(dt, 0.5, int(round(0.5 / dt)))).states[-1]
            errs.append(np.linalg.norm(got - ref))
        rate1 = math.log2(errs[0] / errs[1])
        rate2 = math.log2(errs[1] / errs[2])
        assert rate1 > 1.7 and rate2 > 1.7

    def test_step_function_agrees_with_simulate(self):
        p = GksParams(nu=0.5, N=16)
        u0 = five_mode(16)
        traj = simulate(u0, p, None, StepperConfig(1e-3, 0.002))
        from gks.spectral import nonlinear_coeffs
        rhs = lambda u, t: -nonlinear_coeffs(u.coeffs)
        stepped = step_imex_bdf2(SpectralField(traj.states[0]),
                                 SpectralField(traj.states[1]), rhs, p, 1e-3,
                                 t_prev1=1e-3)
        assert np.allclose(stepped.coeffs, traj.states[2], atol=1e-13)


class TestRecording:
    def test_grid_and_shapes(self):
        p = GksParams(nu=0.5, N=16)
        traj = simulate(five_mode(16), p, None, StepperConfig(1e-3, 0.1, 10))
        assert np.allclose(traj.times, np.arange(0, 0.1001, 0.01))
        assert traj.states.shape == (11, 33)
        assert traj.controls.shape[1] == 0
        assert traj.N == 16

    def test_final_state_always_recorded(self):
        p = GksParams(nu=0.5, N=16)
        traj = simulate(five_mode(16), p, None, StepperConfig(1e-3, 0.025, 10))
        assert traj.times[-1] == pytest.approx(0.025)

    def test_resolution_mismatch_rejected(self):
        with pytest.raises(ValueError):
            simulate(five_mode(8), GksParams(nu=0.5, N=16), None,
                     StepperConfig(1e-3, 0.1))


class TestSafeguards:
    def test_blowup_raises(self):
        # backwards-diffusion surrogate: tiny nu with huge data explodes
        p = GksParams(nu=0.12, N=16)
        u0 = SpectralField(np.full(33, 1e7))
        with pytest.raises(BlowUpError):
            simulate(u0, p, None, StepperConfig(0.5, 50.0))

    def test_monitor_ceiling_scales(self):
        assert boundedness_ceiling(GksParams(nu=0.25, N=8)) == pytest.approx(60.0)
        a = boundedness_ceiling(GksParams(nu=0.2, mu=0.5, N=16))
        b = boundedness_ceiling(GksParams(nu=0.2, N=16))
        assert a == pytest.approx(1.5 * b)

    def test_check_bounded_accepts_free_run(self):
        p = GksParams(nu=0.5, N=16)
        traj = simulate(five_mode(16), p, None, StepperConfig(1e-3, 5.0, 100))
        peak = check_bounded(traj, p)
        assert 0 < peak < boundedness_ceiling(p)

    def test_check_bounded_rejects_excursion(self):
        p = GksParams(nu=0.5, N=16)
        big = np.full((2, 33), 100.0)
        traj = Trajectory(np.array([0.0, 1.0]), big, np.empty((2, 0)), 1.0)
        with pytest.raises(BlowUpError):
            check_bounded(traj, p)
