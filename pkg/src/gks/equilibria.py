"""Steady states and travelling waves of the gKS equation.

Both are zeros of the truncated coefficient system.  Travelling waves use
the translation gauge U1s = 0 and carry the speed c as an extra unknown
(packed into the vacated U1s slot, which keeps the Newton system square);
the n=1 sine equation is replaced by the gauge equation
(c+delta)*U1c + g1s = 0.  Steady states keep both n=1 equations and fix
c = 0.  Branches are tracked by natural parameter continuation with step
halving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .spectral import (GksParams, SpectralField, nonlinear_coeffs,
                       product_coeffs, sin_index, cos_index)

RESIDUAL_TOL = 1e-10
MAX_NEWTON_ITERS = 50


class NewtonError(RuntimeError):
    pass


@dataclass(frozen=True)
class Equilibrium:
    coeffs: SpectralField
    speed: float
    params: GksParams
    stability: str = "unknown"      # "stable" | "unstable" | "unknown"
    branch_label: str = ""

    @property
    def is_travelling(self) -> bool:
        return self.speed != 0.0

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs.coeffs))


@dataclass
class Branch:
    parameter: str                      # "nu" | "mu" | "delta"
    samples: list                       # of (value, Equilibrium, l2norm)
    termination: str = "completed"


def _linear_factors(p: GksParams, n: np.ndarray):
    return p.nu * n**4 - p.mu * n**3 - n**2


def residual_tw(U: SpectralField, c: float, p: GksParams, mode: str = "travelling") -> np.ndarray:
    """Residual of the coefficient system, in the paired sin/cos layout.

    Steady states: slot 0 pins the mean; every other slot is the matching
    physical equation.  Travelling waves: slot 0 pins the mean and the n=1
    sine slot carries the gauge equation (c+delta)*U1c + g1s.
    """
    n = np.arange(1, U.N + 1, dtype=float)
    lin = _linear_factors(p, n)
    a = U.coeffs[1::2]
    b = U.coeffs[2::2]
    g = nonlinear_coeffs(U.coeffs)
    gs = g[1::2]
    gc = g[2::2]
    r = np.empty(2 * U.N + 1)
    r[0] = U.coeffs[0]
    if mode == "steady":
        r[1::2] = lin * a + gs
        r[2::2] = lin * b + gc
    elif mode == "travelling":
        wave = c * n + p.delta * n**3
        r[1::2] = wave * b + lin * a + gs
        r[2::2] = -wave * a + lin * b + gc
        r[sin_index(1)] = (c + p.delta) * b[0] + gs[0]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return r


def _nonlinear_jacobian(coeffs: np.ndarray) -> np.ndarray:
    """d/dU of the u*u_x coefficients: column j is coeffs of (U e_j)_x."""
    dim = len(coeffs)
    J = np.empty((dim, dim))
    e = np.zeros(dim)
    for j in range(dim):
        e[j] = 1.0
        J[:, j] = product_coeffs(coeffs, e) + product_coeffs(e, coeffs)
        e[j] = 0.0
    return J


def _jacobian(U: SpectralField, c: float, p: GksParams, mode: str) -> np.ndarray:
    """Analytic Jacobian w.r.t. the packed unknown vector (see _pack)."""
    N = U.N
    dim = 2 * N + 1
    n = np.arange(1, N + 1, dtype=float)
    lin = _linear_factors(p, n)
    J = _nonlinear_jacobian(U.coeffs)
    gauge_row = J[sin_index(1), :].copy()       # d g1s / dU

    for k in range(1, N + 1):
        i = k - 1
        J[sin_index(k), sin_index(k)] += lin[i]
        J[cos_index(k), cos_index(k)] += lin[i]

    if mode == "travelling":
        wave = c * n + p.delta * n**3
        for k in range(1, N + 1):
            i = k - 1
            J[sin_index(k), cos_index(k)] += wave[i]
            J[cos_index(k), sin_index(k)] -= wave[i]
        # gauge row: d/dU of (c+delta)*U1c + g1s
        gauge_row[cos_index(1)] += c + p.delta
        J[sin_index(1), :] = gauge_row
        # the U1s column becomes the d/dc column (U1s is gauged to zero)
        a, b = U.coeffs[1::2], U.coeffs[2::2]
        dc = np.zeros(dim)
        dc[1::2] = n * b
        dc[2::2] = -n * a
        dc[sin_index(1)] = b[0]
        J[:, sin_index(1)] = dc

    # mean-pin row
    J[0, :] = 0.0
    J[0, 0] = 1.0
    return J


def _pack(U: SpectralField, c: float, mode: str) -> np.ndarray:
    y = U.coeffs.copy()
    if mode == "travelling":
        y[sin_index(1)] = c
    return y


def _unpack(y: np.ndarray, mode: str):
    if mode == "travelling":
        coeffs = y.copy()
        c = float(coeffs[sin_index(1)])
        coeffs[sin_index(1)] = 0.0
        return SpectralField(coeffs), c
    return SpectralField(y.copy()), 0.0


def newton_solve(guess, p: GksParams, mode: str = "steady", classify: bool = True,
                 perturbation: float = 0.01, branch_label: str = "") -> Equilibrium:
    """Damped Newton on the coefficient system.

    ``guess`` is (SpectralField, c).  Converged when the residual infinity
    norm drops below 1e-10.  Stability is classified (optionally) by time
    integration of a perturbed copy.
    """
    U, c = guess
    if not (np.all(np.isfinite(U.coeffs)) and math.isfinite(c)):
        raise NewtonError("non-finite initial guess")
    U = U.truncate(p.N)
    if mode == "travelling":
        g = U.coeffs.copy()
        g[sin_index(1)] = 0.0
        U = SpectralField(g)
    y = _pack(U, c, mode)

    def resid(yv):
        Uv, cv = _unpack(yv, mode)
        return residual_tw(Uv, cv, p, mode)

    r = resid(y)
    for _ in range(MAX_NEWTON_ITERS):
        rnorm = np.max(np.abs(r))
        if rnorm < RESIDUAL_TOL:
            break
        Uv, cv = _unpack(y, mode)
        J = _jacobian(Uv, cv, p, mode)
        cond = np.linalg.cond(J)
        if cond > 1e12:
            # singular along a symmetry direction: take the min-norm step
            step = np.linalg.lstsq(J, -r, rcond=1e-10)[0]
        else:
            step = np.linalg.solve(J, -r)
        lam = 1.0
        for _ in range(10):
            y_try = y + lam * step
            r_try = resid(y_try)
            if np.max(np.abs(r_try)) < rnorm:
                y, r = y_try, r_try
                break
            lam *= 0.5
        else:
            raise NewtonError(
                f"line search failed at residual {rnorm:.3g} (cond(J) = {cond:.3g})")
    else:
        raise NewtonError(f"no convergence after {MAX_NEWTON_ITERS} iterations")

    U, c = _unpack(y, mode)
    if mode == "travelling" and c < 0:
        if p.delta != 0.0:
            raise NewtonError("converged to c < 0; reflection is unavailable for delta != 0")
        # sign convention c > 0: -U(-x+ct) travels with speed -c
        return newton_solve((_negate_reflect(U), -c), p, mode, classify,
                            perturbation, branch_label)

    eq = Equilibrium(U, c, p, "unknown", branch_label)
    if classify:
        eq = replace(eq, stability=classify_stability(eq, amplitude=perturbation))
    return eq


def _negate_reflect(U: SpectralField) -> SpectralField:
    """x -> -x composed with u -> -u: sin coeffs fixed, cos coeffs negated."""
    out = U.coeffs.copy()
    out[0] = -out[0]
    out[2::2] = -out[2::2]
    return SpectralField(out)


def translate(U: SpectralField, shift: float) -> SpectralField:
    """Coefficients of U(x - shift)."""
    out = U.coeffs.copy()
    n = np.arange(1, U.N + 1, dtype=float)
    cs, sn = np.cos(n * shift), np.sin(n * shift)
    a, b = U.coeffs[1::2], U.coeffs[2::2]
    out[1::2] = a * cs + b * sn
    out[2::2] = b * cs - a * sn
    return SpectralField(out)


def tw_target_coeffs(eq: Equilibrium, t: float) -> SpectralField:
    """Coefficient rotation giving the travelling-wave state at time t."""
    return translate(eq.coeffs, eq.speed * t)


def residual_at(eq: Equilibrium) -> float:
    mode = "travelling" if eq.is_travelling else "steady"
    return float(np.max(np.abs(residual_tw(eq.coeffs, eq.speed, eq.params, mode))))


def best_phase_residual(coeffs: np.ndarray, target: SpectralField, n_grid: int = 256):
    """min over shifts of || u - target(. - shift) ||_L2 and the argmin shift."""
    shifts = np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)
    f = lambda s: float(np.linalg.norm(coeffs - translate(target, s).coeffs))
    vals = [f(s) for s in shifts]
    i = int(np.argmin(vals))
    lo = shifts[i] - 2.0 * math.pi / n_grid
    hi = shifts[i] + 2.0 * math.pi / n_grid
    for _ in range(40):
        m1 = lo + 0.381966 * (hi - lo)
        m2 = hi - 0.381966 * (hi - lo)
        if f(m1) < f(m2):
            hi = m2
        else:
            lo = m1
    s = 0.5 * (lo + hi)
    return f(s), float(s % (2.0 * math.pi))


def classify_stability(eq: Equilibrium, amplitude: float = 0.01, T: float = 5.0,
                       dt: float | None = None) -> str:
    """Perturb, integrate, and compare the drift from the (moving) target."""
    from . import dynamics  # local import to avoid a cycle

    p = eq.params
    dt = dt or dynamics.default_dt(p.nu)
    scale = max(eq.l2_norm(), 1.0) * amplitude
    rng = np.random.default_rng(0)
    pert = rng.standard_normal(2 * p.N + 1)
    pert[0] = 0.0
    pert *= scale / np.linalg.norm(pert)
    u0 = SpectralField(eq.coeffs.coeffs + pert)
    stride = max(1, int(round(T / dt / 50)))
    try:
        traj = dynamics.simulate(u0, p, None, dynamics.StepperConfig(dt, T, stride))
    except dynamics.BlowUpError:
        return "unstable"
    r0 = float(np.linalg.norm(pert))
    # compare modulo translation: the shift family is neutrally stable
    r_end = best_phase_residual(traj.states[-1], eq.coeffs)[0]
    return "stable" if r_end <= r0 else "unstable"


def harmonic_seed(n: int, p: GksParams) -> SpectralField:
    """Single-harmonic guess A*sin(nx) with A from the linear growth balance.

    The offset keeps the guess outside the zero solution's Newton basin,
    which swallows small-amplitude seeds even when a nontrivial branch
    exists nearby.
    """
    lam = p.nu * n**4 - p.mu * n**3 - n**2
    A = 2.0 * math.sqrt(max(-lam, 0.0)) + 4.0
    return SpectralField.from_modes(p.N, sines={n: A})


def continue_branch(seed: Equilibrium, parameter: str, stop: float, step: float,
                    classify: bool = False, min_step: float = 1e-5,
                    record=None) -> Branch:
    """Natural continuation of ``seed`` in ``parameter`` towards ``stop``.

    The previous solution seeds each Newton solve; the step is halved on
    failure down to ``min_step``.  ``record`` may be a set of parameter
    values that must be sampled exactly (they are inserted into the sweep).
    """
    if parameter not in ("nu", "mu", "delta"):
        raise ValueError("parameter must be one of nu/mu/delta")
    mode = "travelling" if seed.is_travelling else "steady"
    value = getattr(seed.params, parameter)
    direction = 1.0 if stop >= value else -1.0
    step = abs(step)
    musts = sorted((v for v in (record or ()) if (v - value) * direction > 0),
                   key=lambda v: direction * v)

    branch = Branch(parameter, [(value, seed, seed.l2_norm())])
    current = seed
    termination = "completed"
    while (stop - value) * direction > 1e-12:
        target = value + direction * step
        if (target - stop) * direction > 0:
            target = stop
        if musts and (target - musts[0]) * direction >= 0:
            target = musts[0]
        p_new = replace(current.params, **{parameter: target})
        try:
            eq = newton_solve((current.coeffs, current.speed), p_new, mode,
                              classify=classify, branch_label=current.branch_label)
        except NewtonError:
            step *= 0.5
            if step < min_step:
                termination = "step underflow (fold suspected)"
                break
            continue
        value = target
        current = eq
        if musts and abs(value - musts[0]) < 1e-14:
            musts.pop(0)
        branch.samples.append((value, eq, eq.l2_norm()))
    branch.termination = termination
    return branch


def replicate(eq: Equilibrium, n: int, N: int | None = None) -> Equilibrium:
    """n-fold spatial replication: U(x) -> n*U(nx) solves at nu/n^2, delta/n.

    The replicated wave travels at n*c.  Exact up to truncation of source
    harmonics above N/n; callers may polish with ``newton_solve``.
    """
    p = eq.params
    N = N or p.N
    out = np.zeros(2 * N + 1)
    for j in range(1, eq.coeffs.N + 1):
        if n * j > N:
            break
        out[sin_index(n * j)] = n * eq.coeffs.sin(j)
        out[cos_index(n * j)] = n * eq.coeffs.cos(j)
    p_new = GksParams(nu=p.nu / n**2, mu=p.mu, delta=p.delta / n, N=N)
    return Equilibrium(SpectralField(out), n * eq.speed, p_new,
                       eq.stability, f"{eq.branch_label}x{n}")


def project_samples(values: np.ndarray, N: int) -> SpectralField:
    """Projection of uniform-grid samples onto the truncated basis."""
    M = len(values)
    c = np.fft.rfft(values) / M
    out = np.zeros(2 * N + 1)
    out[0] = c[0].real * math.sqrt(2.0 * math.pi)
    k = min(N, len(c) - 1)
    out[1:2 * k + 1:2] = -2.0 * math.sqrt(math.pi) * c[1:k + 1].imag
    out[2:2 * k + 2:2] = 2.0 * math.sqrt(math.pi) * c[1:k + 1].real
    return SpectralField(out)


def kdv_soliton_seed(p: GksParams, c: float) -> SpectralField:
    """Mean-zero periodicised KdV soliton 3c sech^2(sqrt(c/delta)(x-pi)/2)."""
    if p.delta <= 0:
        raise ValueError("KdV seeding needs delta > 0")
    M = 8 * p.N
    x = np.linspace(0.0, 2.0 * math.pi, M, endpoint=False)
    prof = 3.0 * c / np.cosh(0.5 * math.sqrt(c / p.delta) * (x - math.pi)) ** 2
    prof -= prof.mean()
    return project_samples(prof, p.N)


def dereplicate(eq: Equilibrium, n: int, N: int) -> Equilibrium:
    """Inverse of ``replicate``: extract V from U = n*V(nx).

    Requires U to carry energy only in harmonics divisible by n; the result
    V(x) = U(x/n)/n travels at c/n and solves at nu*n^2, delta*n.
    """
    p = eq.params
    out = np.zeros(2 * N + 1)
    for j in range(1, min(N, eq.coeffs.N // n) + 1):
        out[sin_index(j)] = eq.coeffs.sin(n * j) / n
        out[cos_index(j)] = eq.coeffs.cos(n * j) / n
    p_new = GksParams(nu=p.nu * n**2, mu=p.mu, delta=p.delta * n, N=N)
    return Equilibrium(SpectralField(out), eq.speed / n, p_new,
                       "unknown", eq.branch_label)


_PULSE_CACHE: dict = {}


def _base_one_pulse(N: int) -> Equilibrium:
    """Single pulse at (nu, delta) = (0.36, 1.0), the continuation seed.

    At (0.09, 0.5) the free dynamics settle onto a two-pulse travelling
    wave whose energy sits entirely in even harmonics; de-replicating it
    yields the one-pulse solution of the four-times-stiffer problem.
    """
    from . import dynamics  # local import to avoid a cycle

    p = GksParams(nu=0.09, mu=0.0, delta=0.5, N=64)
    u0 = SpectralField.from_modes(64, sines={1: 0.5, 2: 0.4, 3: 0.3},
                                  cosines={1: 0.5, 2: 0.3})
    traj = dynamics.simulate(u0, p, None, dynamics.StepperConfig(1e-3, 80.0, 1000))
    eq2 = newton_solve((traj.final_field(), 0.74), p, "travelling",
                       classify=False, branch_label="pulse1")
    eq1 = dereplicate(eq2, 2, N)
    return newton_solve((eq1.coeffs, eq1.speed), eq1.params, "travelling",
                        classify=False, branch_label="pulse1")


def find_pulse_wave(nu: float, delta: float = 0.0, n_pulses: int = 1,
                    N: int = 128, classify: bool = False) -> Equilibrium:
    """Locate an n-pulse travelling wave at (nu, delta) with mu = 0.

    Strategy: obtain the single pulse of the equivalent one-pulse problem
    (nu*n^2, delta*n) by parameter continuation from a seed pulse found by
    time integration, then replicate n-fold and polish.  Results are cached
    per (nu, delta, n_pulses, N).
    """
    key = (round(nu, 12), round(delta, 12), n_pulses, N)
    if key in _PULSE_CACHE:
        eq = _PULSE_CACHE[key]
    else:
        nu1 = nu * n_pulses**2
        d1 = delta * n_pulses
        base_key = (round(nu1, 12), round(d1, 12), 1, N)
        if base_key in _PULSE_CACHE:
            eq = _PULSE_CACHE[base_key]
        else:
            eq = _base_one_pulse(N)
            if abs(eq.params.nu - nu1) > 1e-14:
                eq = continue_branch(eq, "nu", nu1, 0.01).samples[-1][1]
            if abs(eq.params.delta - d1) > 1e-14:
                eq = continue_branch(eq, "delta", d1, 0.05).samples[-1][1]
            _PULSE_CACHE[base_key] = eq
        if n_pulses > 1:
            eq = replicate(eq, n_pulses, N=N)
            eq = newton_solve((eq.coeffs, eq.speed), eq.params, "travelling",
                              classify=False, branch_label=f"pulse{n_pulses}")
        _PULSE_CACHE[key] = eq
    if classify:
        eq = replace(eq, stability=classify_stability(eq))
    return eq
