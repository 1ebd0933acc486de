"""Shared fixtures: reference states that several test modules reuse."""

import numpy as np
import pytest

from gks.spectral import GksParams, SpectralField
from gks.dynamics import StepperConfig, simulate
from gks.equilibria import find_pulse_wave, newton_solve


def five_mode(N: int) -> SpectralField:
    """Standard five-harmonic initial condition with a nonzero mean."""
    ones = {n: 1.0 for n in range(1, 6)}
    return SpectralField.from_modes(N, sines=ones, cosines=dict(ones), mean=1.0)


def single_mode(N: int) -> SpectralField:
    return SpectralField.from_modes(N, sines={1: 1.0}, cosines={1: 1.0})


@pytest.fixture(scope="session")
def chaos_state() -> SpectralField:
    """A fully developed chaotic state at nu = 0.01 (free run to t = 10)."""
    p = GksParams(nu=0.01, N=128)
    traj = simulate(five_mode(128), p, None,
                    StepperConfig(2.5e-4, 10.0, record_every=4000))
    return SpectralField(traj.states[-1])


@pytest.fixture(scope="session")
def pulse1():
    return find_pulse_wave(0.01, 0.0, 1)


@pytest.fixture(scope="session")
def steady_01115():
    """The attracting nontrivial steady state at nu = 0.1115.

    Found by running the free dynamics into its attractor and polishing the
    final snapshot with Newton.
    """
    p = GksParams(nu=0.1115, N=32)
    traj = simulate(single_mode(32), p, None,
                    StepperConfig(1e-3, 100.0, record_every=10000))
    return newton_solve((SpectralField(traj.states[-1]), 0.0), p, "steady",
                        classify=False)


@pytest.fixture(scope="session")
def steady_035_mu03():
    p = GksParams(nu=0.35, mu=0.3, N=32)
    seed = SpectralField.from_modes(32, sines={2: 3.0, 3: 3.0})
    return newton_solve((seed, 0.0), p, "steady", classify=False)
