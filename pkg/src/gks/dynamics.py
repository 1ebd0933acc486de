"""Time integration of the (controlled) gKS Galerkin system.

The linear symbol is treated implicitly (including the dispersive 2x2
rotation blocks on each sin/cos pair); the quadratic nonlinearity and the
control forcing are explicit.  Startup is one IMEX-Euler step, then the
second-order implicit-explicit BDF formula

    (3/2 I - dt*L) u^{n+1} = 2 u^n - 1/2 u^{n-1} + dt (2 E(u^n) - E(u^{n-1})).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import GksParams, SpectralField, nonlinear_coeffs

BLOWUP_LIMIT = 1e8


class BlowUpError(RuntimeError):
    """A coefficient left the trust region; the run is not believable."""

    def __init__(self, t: float, amplitude: float):
        super().__init__(f"solution blew up at t={t:.6g} (max |coeff| = {amplitude:.3g})")
        self.t = t


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    T: float
    record_every: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.T < self.dt:
            raise ValueError("final time must be at least one step")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


def default_dt(nu: float) -> float:
    """Step size keeping the explicit nonlinearity stable at small nu."""
    return 1e-3 if nu >= 0.1 else 2.5e-4


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: uniform times, coefficient snapshots, control amplitudes."""

    times: np.ndarray           # (n,)
    states: np.ndarray          # (n, 2N+1)
    controls: np.ndarray        # (n, m); m = 0 for unforced runs
    dt: float

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.controls)):
            raise ValueError("times/states/controls length mismatch")

    @property
    def N(self) -> int:
        return (self.states.shape[1] - 1) // 2

    def field(self, i: int) -> SpectralField:
        return SpectralField(self.states[i])

    def final_field(self) -> SpectralField:
        return SpectralField(self.states[-1])

    def l2_norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


class _ImplicitSolve:
    """Factorisation of (beta*I - dt*L) in the paired sin/cos layout."""

    def __init__(self, p: GksParams, dt: float, beta: float):
        n = np.arange(1, p.N + 1, dtype=float)
        sigma = -p.nu * n**4 + p.mu * n**3 + n**2
        disp = p.delta * n**3
        self.diag = beta - dt * sigma
        self.off = dt * disp
        self.den = self.diag**2 + self.off**2
        self.beta = beta

    def __call__(self, rhs: np.ndarray) -> np.ndarray:
        # dispersion rotates each pair: d/dt (a, b) += delta*n^3 * (-b, a)
        out = np.empty_like(rhs)
        out[0] = rhs[0] / self.beta
        ra, rb = rhs[1::2], rhs[2::2]
        out[1::2] = (self.diag * ra - self.off * rb) / self.den
        out[2::2] = (self.off * ra + self.diag * rb) / self.den
        return out


def _explicit_term(coeffs: np.ndarray, t: float, forcing):
    """-u*u_x plus control forcing; returns (coeffs, amplitudes)."""
    rhs = -nonlinear_coeffs(coeffs)
    if forcing is None:
        return rhs, np.empty(0)
    f = forcing.amplitudes(t, coeffs)
    return rhs + forcing.matrix @ f, f


def step_imex_bdf2(prev2: SpectralField, prev1: SpectralField, rhs_explicit,
                   p: GksParams, dt: float, t_prev1: float = 0.0) -> SpectralField:
    """One BDF2 step given the two history states.

    ``rhs_explicit(field, t)`` supplies the explicit part E (nonlinearity
    plus forcing) as a coefficient vector.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if prev2.N != prev1.N or prev1.N != p.N:
        raise ValueError("history states must share the truncation of p")
    for u in (prev2, prev1):
        if not np.all(np.isfinite(u.coeffs)):
            raise BlowUpError(t_prev1, float("inf"))
    e1 = np.asarray(rhs_explicit(prev1, t_prev1))
    e2 = np.asarray(rhs_explicit(prev2, t_prev1 - dt))
    rhs = 2.0 * prev1.coeffs - 0.5 * prev2.coeffs + dt * (2.0 * e1 - e2)
    return SpectralField(_ImplicitSolve(p, dt, 1.5)(rhs))


def simulate(u0: SpectralField, p: GksParams, forcing, cfg: StepperConfig) -> Trajectory:
    """Integrate the controlled gKS system and record the trajectory.

    ``forcing`` is None (unforced) or an object with a ``matrix`` attribute
    of shape (2N+1, m) and an ``amplitudes(t, coeffs) -> (m,)`` method.
    """
    if u0.N != p.N:
        raise ValueError("initial condition resolution differs from params")
    dt = cfg.dt
    nsteps = cfg.n_steps
    m = 0 if forcing is None else forcing.matrix.shape[1]

    euler = _ImplicitSolve(p, dt, 1.0)
    bdf2 = _ImplicitSolve(p, dt, 1.5)

    times, states, controls = [], [], []

    def record(k, coeffs, f):
        times.append(k * dt)
        states.append(coeffs.copy())
        controls.append(f.copy() if m else np.empty(0))

    u_prev = u0.coeffs.copy()
    e_prev, f_prev = _explicit_term(u_prev, 0.0, forcing)
    record(0, u_prev, f_prev)

    # IMEX-Euler bootstrap for the first level
    u_cur = euler(u_prev + dt * e_prev)
    e_cur, f_cur = _explicit_term(u_cur, dt, forcing)
    if 1 % cfg.record_every == 0 or nsteps == 1:
        record(1, u_cur, f_cur)

    for k in range(2, nsteps + 1):
        rhs = 2.0 * u_cur - 0.5 * u_prev + dt * (2.0 * e_cur - e_prev)
        u_new = bdf2(rhs)
        amax = np.max(np.abs(u_new))
        if not np.isfinite(amax) or amax > BLOWUP_LIMIT:
            raise BlowUpError(k * dt, amax)
        u_prev, u_cur = u_cur, u_new
        e_prev, f_prev = e_cur, f_cur
        e_cur, f_cur = _explicit_term(u_cur, k * dt, forcing)
        if k % cfg.record_every == 0 or k == nsteps:
            record(k, u_cur, f_cur)

    return Trajectory(np.array(times), np.array(states), np.array(controls), dt)


# Empirical L2 ceilings for free-running (unforced) trajectories.  The
# attractor norm grows like nu^(-1/2) as the domain grows; the prefactor was
# measured on long chaotic runs and carries a 10x safety factor.
_MONITOR_PREFACTOR = 30.0


def boundedness_ceiling(p: GksParams) -> float:
    return _MONITOR_PREFACTOR * (1.0 + p.mu) * p.nu ** -0.5


def check_bounded(traj: Trajectory, p: GksParams) -> float:
    """Largest L2 norm along the run; raises if the ceiling is violated."""
    peak = float(traj.l2_norms().max())
    ceiling = boundedness_ceiling(p)
    if peak > ceiling:
        raise BlowUpError(float(traj.times[np.argmax(traj.l2_norms())]), peak)
    return peak
