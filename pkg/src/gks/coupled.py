"""Two-field KS system coupled through second derivatives.

The state is U = [u1; u2]; each component obeys its own KS equation plus a
cross term -alpha_i * u_j,xx.  Per mode n the linearisation is the 2x2 block

    [[-nu n^4 + n^2,  alpha1 n^2],
     [ alpha2 n^2,   -nu n^4 + n^2]]

with eigenvalues -nu n^4 + n^2 +/- n^2 sqrt(alpha1 alpha2); alpha1*alpha2
must be nonnegative so the split is real.  Concatenated coefficient vectors
[z1, z2] (each of length 2N+1) are used throughout, and each field carries
its own set of point actuators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import BLOWUP_LIMIT, BlowUpError, StepperConfig, boundedness_ceiling
from .equilibria import NewtonError, MAX_NEWTON_ITERS, RESIDUAL_TOL, _nonlinear_jacobian
from .feedback import ActuatorSet
from .spectral import GksParams, SpectralField, nonlinear_coeffs


@dataclass(frozen=True)
class CoupledParams:
    """Viscosity, second-derivative coupling coefficients and truncation.

    beta1/beta2 are placeholders for fourth-derivative coupling; only the
    zero value is implemented.
    """

    nu: float
    alpha1: float = 0.0
    alpha2: float = 0.0
    N: int = 32
    beta1: float = 0.0
    beta2: float = 0.0

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.alpha1 * self.alpha2 < 0:
            raise ValueError("alpha1*alpha2 must be nonnegative for a real spectrum")
        if self.beta1 != 0.0 or self.beta2 != 0.0:
            raise NotImplementedError("fourth-derivative coupling is not implemented")
        l1, _, _ = coupled_unstable_count(self)
        if self.N < 2 * l1 + 2:
            raise ValueError(f"N={self.N} under-resolves the instability (l1={l1})")

    def scalar(self) -> GksParams:
        return GksParams(nu=self.nu, N=self.N)


@dataclass(frozen=True)
class CoupledField:
    """Pair of spectral fields sharing the truncation order."""

    u1: SpectralField
    u2: SpectralField

    def __post_init__(self):
        if self.u1.N != self.u2.N:
            raise ValueError("components must share the truncation order")

    @property
    def N(self) -> int:
        return self.u1.N

    def pack(self) -> np.ndarray:
        return np.concatenate([self.u1.coeffs, self.u2.coeffs])

    @classmethod
    def unpack(cls, z: np.ndarray) -> "CoupledField":
        d = len(z) // 2
        return cls(SpectralField(z[:d]), SpectralField(z[d:]))

    @classmethod
    def zeros(cls, N: int) -> "CoupledField":
        return cls(SpectralField.zeros(N), SpectralField.zeros(N))

    def l2_norms(self) -> tuple[float, float]:
        return (float(np.linalg.norm(self.u1.coeffs)),
                float(np.linalg.norm(self.u2.coeffs)))


def coupled_unstable_count(p) -> tuple[int, int, int]:
    """(l1, l2, m): unstable counts of the +/- branches and 2(l1+l2+1)."""
    s = math.sqrt(p.alpha1 * p.alpha2)
    l1 = int(math.floor(math.sqrt((1.0 + s) / p.nu)))
    arg = (1.0 - s) / p.nu
    l2 = int(math.floor(math.sqrt(arg))) if arg >= 0 else 0
    return l1, l2, 2 * (l1 + l2 + 1)


def linear_block(p: CoupledParams, n: int) -> np.ndarray:
    """Per-mode 2x2 linear block acting on (u1_n, u2_n)."""
    sig = -p.nu * n**4 + n**2
    return np.array([[sig, p.alpha1 * n**2], [p.alpha2 * n**2, sig]])


def coupled_rhs(U: CoupledField, p: CoupledParams) -> CoupledField:
    """Right-hand side: linear part, coupling, and each field's u*u_x."""
    n = np.arange(1, U.N + 1, dtype=float)
    sig = -p.nu * n**4 + n**2
    cross = n**2

    def component(zi, zj, alpha):
        out = -nonlinear_coeffs(zi)
        for sl in (slice(1, None, 2), slice(2, None, 2)):
            out[sl] += sig * zi[sl] + alpha * cross * zj[sl]
        return out

    return CoupledField(
        SpectralField(component(U.u1.coeffs, U.u2.coeffs, p.alpha1)),
        SpectralField(component(U.u2.coeffs, U.u1.coeffs, p.alpha2)),
    )


def coupled_linear_matrix(p: CoupledParams) -> np.ndarray:
    """Full 2(2N+1)-square block matrix [[A0, A1], [A2, A0]]."""
    d = 2 * p.N + 1
    n = np.arange(1, p.N + 1, dtype=float)
    diag = np.zeros(d)
    diag[1::2] = diag[2::2] = -p.nu * n**4 + n**2
    cross = np.zeros(d)
    cross[1::2] = cross[2::2] = n**2
    A = np.zeros((2 * d, 2 * d))
    A[:d, :d] = A[d:, d:] = np.diag(diag)
    A[:d, d:] = p.alpha1 * np.diag(cross)
    A[d:, :d] = p.alpha2 * np.diag(cross)
    return A


@dataclass(frozen=True)
class CoupledTrajectory:
    """Recorded coupled run on the concatenated-coefficient layout."""

    times: np.ndarray           # (n,)
    states: np.ndarray          # (n, 2*(2N+1))
    controls: np.ndarray        # (n, 2m); 0 columns when unforced
    dt: float

    @property
    def N(self) -> int:
        return (self.states.shape[1] // 2 - 1) // 2

    def field(self, i: int) -> CoupledField:
        return CoupledField.unpack(self.states[i])

    def component_states(self, which: int) -> np.ndarray:
        d = self.states.shape[1] // 2
        return self.states[:, :d] if which == 1 else self.states[:, d:]

    def l2_norms(self) -> np.ndarray:
        """(n, 2) array of per-component L2 norms."""
        d = self.states.shape[1] // 2
        return np.stack([np.linalg.norm(self.states[:, :d], axis=1),
                         np.linalg.norm(self.states[:, d:], axis=1)], axis=1)


class _CoupledImplicit:
    """Solve (beta*I - dt*A_lin) on the concatenated layout, per 2x2 block."""

    def __init__(self, p: CoupledParams, dt: float, beta: float):
        n = np.arange(1, p.N + 1, dtype=float)
        sig = -p.nu * n**4 + n**2
        self.d = beta - dt * sig
        self.o1 = dt * p.alpha1 * n**2
        self.o2 = dt * p.alpha2 * n**2
        self.det = self.d**2 - self.o1 * self.o2
        self.beta = beta
        self.dim = 2 * p.N + 1

    def __call__(self, rhs: np.ndarray) -> np.ndarray:
        r1, r2 = rhs[:self.dim], rhs[self.dim:]
        out = np.empty_like(rhs)
        o1, o2 = out[:self.dim], out[self.dim:]
        o1[0] = r1[0] / self.beta
        o2[0] = r2[0] / self.beta
        for sl in (slice(1, None, 2), slice(2, None, 2)):
            o1[sl] = (self.d * r1[sl] + self.o1 * r2[sl]) / self.det
            o2[sl] = (self.o2 * r1[sl] + self.d * r2[sl]) / self.det
        return out


def coupled_simulate(U0: CoupledField, p: CoupledParams, forcing,
                     cfg: StepperConfig) -> CoupledTrajectory:
    """IMEX-BDF2 integration of the coupled system (mirrors ``simulate``)."""
    if U0.N != p.N:
        raise ValueError("initial condition resolution differs from params")
    dt = cfg.dt
    nsteps = cfg.n_steps
    m = 0 if forcing is None else forcing.matrix.shape[1]
    dim = 2 * p.N + 1

    def explicit(z, t):
        rhs = np.concatenate([-nonlinear_coeffs(z[:dim]),
                              -nonlinear_coeffs(z[dim:])])
        if forcing is None:
            return rhs, np.empty(0)
        f = forcing.amplitudes(t, z)
        return rhs + forcing.matrix @ f, f

    euler = _CoupledImplicit(p, dt, 1.0)
    bdf2 = _CoupledImplicit(p, dt, 1.5)

    times, states, controls = [], [], []

    def record(k, z, f):
        times.append(k * dt)
        states.append(z.copy())
        controls.append(f.copy() if m else np.empty(0))

    z_prev = U0.pack()
    e_prev, f_prev = explicit(z_prev, 0.0)
    record(0, z_prev, f_prev)

    z_cur = euler(z_prev + dt * e_prev)
    e_cur, f_cur = explicit(z_cur, dt)
    if 1 % cfg.record_every == 0 or nsteps == 1:
        record(1, z_cur, f_cur)

    for k in range(2, nsteps + 1):
        z_new = bdf2(2.0 * z_cur - 0.5 * z_prev + dt * (2.0 * e_cur - e_prev))
        amax = np.max(np.abs(z_new))
        if not np.isfinite(amax) or amax > BLOWUP_LIMIT:
            raise BlowUpError(k * dt, amax)
        z_prev, z_cur = z_cur, z_new
        e_prev, f_prev = e_cur, f_cur
        e_cur, f_cur = explicit(z_cur, k * dt)
        if k % cfg.record_every == 0 or k == nsteps:
            record(k, z_cur, f_cur)

    return CoupledTrajectory(np.array(times), np.array(states),
                             np.array(controls), dt)


# ---------------------------------------------------------------------------
# feedback

@dataclass(frozen=True)
class CoupledMatrices:
    """Controlled block of the coupled linearisation.

    The controlled coordinates are the first q slots of each field (mean
    plus the lowest sin/cos pairs), stacked field-first.
    """

    A_u: np.ndarray             # (2q, 2q)
    B_u: np.ndarray             # (2q, 2m)
    B: np.ndarray               # (2*(2N+1), 2m) block-diagonal influence
    acts1: ActuatorSet
    acts2: ActuatorSet
    block_size: int             # q per field


def coupled_matrices(acts1: ActuatorSet, acts2: ActuatorSet, p: CoupledParams,
                     block_size: int | None = None) -> CoupledMatrices:
    """Assemble the controlled block; q defaults to 2*l1+1 per field."""
    l1, _, _ = coupled_unstable_count(p)
    q = block_size if block_size is not None else 2 * l1 + 1
    if q > 2 * p.N + 1:
        raise ValueError("block size exceeds the truncation")
    d = 2 * p.N + 1
    A = coupled_linear_matrix(p)
    idx = np.concatenate([np.arange(q), d + np.arange(q)])
    A_u = A[np.ix_(idx, idx)]
    B1 = acts1.matrix(p.N)
    B2 = acts2.matrix(p.N)
    B = np.zeros((2 * d, acts1.m + acts2.m))
    B[:d, :acts1.m] = B1
    B[d:, acts1.m:] = B2
    B_u = B[idx, :]
    return CoupledMatrices(A_u, B_u, B, acts1, acts2, q)


def coupled_target_spectrum(mats: CoupledMatrices) -> np.ndarray:
    """Mirror the scalar rule on the block eigenvalues: reflect unstable
    ones, map (near-)zero ones to -1, keep stable ones."""
    eigs = np.linalg.eigvals(mats.A_u)
    if np.max(np.abs(eigs.imag)) > 1e-9:
        raise ValueError("controlled block has complex eigenvalues")
    out = []
    for lam in np.sort(eigs.real):
        if abs(lam) < 1e-12:
            out.append(-1.0)
        elif lam > 0:
            out.append(-lam)
        else:
            out.append(lam)
    return np.array(out)


@dataclass(frozen=True)
class CoupledGain:
    K: np.ndarray               # (2m, 2q)
    target_eigs: np.ndarray
    built_from: CoupledMatrices


def coupled_place(mats: CoupledMatrices, targets: np.ndarray) -> CoupledGain:
    """Exact placement: K solves B_u K = A_desired - A_u.

    A_desired keeps the eigenvectors of A_u and replaces its eigenvalues by
    the targets (matched in ascending order); for more controls than block
    coordinates the minimum-norm right inverse of B_u is used.
    """
    targets = np.asarray(targets, dtype=float)
    q2 = mats.A_u.shape[0]
    if len(targets) != q2:
        raise ValueError("need one target per controlled coordinate")
    lam, V = np.linalg.eig(mats.A_u)
    order = np.argsort(lam.real)
    lam, V = lam[order], V[:, order]
    A_des = np.real(V @ np.diag(targets) @ np.linalg.inv(V))
    D = A_des - mats.A_u
    Bu = mats.B_u
    if Bu.shape[0] == Bu.shape[1]:
        K = np.linalg.solve(Bu, D)
    else:
        K = Bu.T @ np.linalg.solve(Bu @ Bu.T, D)
    achieved = np.sort(np.linalg.eigvals(mats.A_u + Bu @ K).real)
    if np.max(np.abs(achieved - np.sort(targets))) > 1e-8:
        raise ValueError("pole placement failed to match the targets")
    return CoupledGain(K, targets, mats)


@dataclass(frozen=True)
class CoupledForcing:
    """F = K (z_U - z_Ubar) restricted to the controlled coordinates."""

    matrix: np.ndarray          # (2*(2N+1), 2m)
    K: np.ndarray               # (2m, 2q)
    indices: np.ndarray         # controlled coordinates in the packed layout
    target: np.ndarray | None = None

    def amplitudes(self, t: float, z: np.ndarray) -> np.ndarray:
        zu = z[self.indices]
        if self.target is not None:
            zu = zu - self.target[self.indices]
        return self.K @ zu


def coupled_feedback_law(gain: CoupledGain, p: CoupledParams,
                         target: CoupledField | None = None) -> CoupledForcing:
    d = 2 * p.N + 1
    q = gain.built_from.block_size
    idx = np.concatenate([np.arange(q), d + np.arange(q)])
    tgt = target.pack() if target is not None else None
    return CoupledForcing(gain.built_from.B, gain.K, idx, tgt)


def coupled_feedback(p: CoupledParams, acts1: ActuatorSet, acts2: ActuatorSet,
                     U0: CoupledField, cfg: StepperConfig,
                     target: CoupledField | None = None,
                     targets: np.ndarray | None = None):
    """Place poles on the controlled block and run the closed loop.

    Returns (gain, trajectory).
    """
    mats = coupled_matrices(acts1, acts2, p)
    if targets is None:
        targets = coupled_target_spectrum(mats)
    gain = coupled_place(mats, targets)
    law = coupled_feedback_law(gain, p, target)
    traj = coupled_simulate(U0, p, law, cfg)
    return gain, traj


# ---------------------------------------------------------------------------
# diagnostics

def coupled_cost(traj: CoupledTrajectory, target: CoupledField | None,
                 gamma: float) -> tuple[float, float]:
    """L2 tracking + terminal + (gamma/2) squared control penalty.

    Returns (total cost, control energy sum_i ||f_i||_{L2}).
    """
    ref = target.pack() if target is not None else 0.0
    sq = np.sum((traj.states - ref) ** 2, axis=1)
    tracking = 0.5 * float(np.trapezoid(sq, traj.times))
    terminal = 0.5 * float(sq[-1])
    if traj.controls.size:
        f_sq = np.trapezoid(traj.controls**2, traj.times, axis=0)
        penalty = 0.5 * gamma * float(f_sq.sum())
        energy = float(np.sqrt(f_sq).sum())
    else:
        penalty = energy = 0.0
    return tracking + terminal + penalty, energy


def coupled_boundedness_monitor(traj: CoupledTrajectory,
                                ceiling: float | None = None) -> float:
    """Max over time of ||u1|| + ||u2||; raises if a ceiling is given and hit."""
    norms = traj.l2_norms().sum(axis=1)
    peak = float(norms.max())
    if ceiling is not None and peak > ceiling:
        raise BlowUpError(float(traj.times[int(np.argmax(norms))]), peak)
    return peak


def coupled_default_ceiling(p: CoupledParams) -> float:
    return 2.0 * boundedness_ceiling(p.scalar())


def coupled_lyapunov_monitor(traj: CoupledTrajectory,
                             target: CoupledField | None = None,
                             transient: float = 1.0, tol: float = 1e-8):
    """Finite-difference dV/dt of V = ||u1-ubar1||^2 + ||u2-ubar2||^2.

    Returns (times, dV, flagged) where flagged marks post-transient growth
    beyond tol.
    """
    ref = target.pack() if target is not None else 0.0
    V = np.sum((traj.states - ref) ** 2, axis=1)
    dV = np.gradient(V, traj.times)
    flagged = (traj.times > transient) & (dV > tol)
    return traj.times, dV, flagged


# ---------------------------------------------------------------------------
# steady states

def coupled_residual(U: CoupledField, p: CoupledParams) -> np.ndarray:
    """Steady residual (the negated right-hand side) with per-field mean pins."""
    rhs = coupled_rhs(U, p)
    r = -rhs.pack()
    d = 2 * U.N + 1
    r[0] = U.u1.coeffs[0]
    r[d] = U.u2.coeffs[0]
    return r


def _coupled_jacobian(U: CoupledField, p: CoupledParams) -> np.ndarray:
    d = 2 * U.N + 1
    n = np.arange(1, U.N + 1, dtype=float)
    lin = p.nu * n**4 - n**2
    J = np.zeros((2 * d, 2 * d))
    J[:d, :d] = _nonlinear_jacobian(U.u1.coeffs)
    J[d:, d:] = _nonlinear_jacobian(U.u2.coeffs)
    for sl in (slice(1, d, 2), slice(2, d, 2)):
        ii = np.arange(d)[sl]
        J[ii, ii] += lin
        J[d + ii, d + ii] += lin
        J[ii, d + ii] -= p.alpha1 * n**2
        J[d + ii, ii] -= p.alpha2 * n**2
    for row in (0, d):
        J[row, :] = 0.0
        J[row, row] = 1.0
    return J


def coupled_steady_state(seed: CoupledField, p: CoupledParams) -> CoupledField:
    """Damped Newton on the coupled residual from (typically scalar) seeds."""
    U = CoupledField(seed.u1.truncate(p.N), seed.u2.truncate(p.N))
    z = U.pack()
    r = coupled_residual(U, p)
    for _ in range(MAX_NEWTON_ITERS):
        rnorm = np.max(np.abs(r))
        if rnorm < RESIDUAL_TOL:
            return CoupledField.unpack(z)
        J = _coupled_jacobian(CoupledField.unpack(z), p)
        if np.linalg.cond(J) > 1e12:
            step = np.linalg.lstsq(J, -r, rcond=1e-10)[0]
        else:
            step = np.linalg.solve(J, -r)
        lam = 1.0
        for _ in range(10):
            z_try = z + lam * step
            r_try = coupled_residual(CoupledField.unpack(z_try), p)
            if np.max(np.abs(r_try)) < rnorm:
                z, r = z_try, r_try
                break
            lam *= 0.5
        else:
            raise NewtonError(f"line search failed at residual {rnorm:.3g}")
    raise NewtonError(f"no convergence after {MAX_NEWTON_ITERS} iterations")
