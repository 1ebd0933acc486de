"""Cost functionals, adjoint solves, and actuator-placement optimisation.

The placement loop holds the feedback structure fixed (controls are the
linear feedback law; their dependence on the actuator positions through the
gain is neglected when differentiating) and descends the tracking-plus-
penalty cost using the adjoint state: the position gradient of the cost is
P_i = int_0^T f_i(t) p_x(x_i, t) dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (BLOWUP_LIMIT, BlowUpError, StepperConfig, Trajectory,
                       _ImplicitSolve, default_dt, simulate)
from .equilibria import Equilibrium
from .feedback import (ActuatorSet, FeedbackGain, build_matrices, feedback_law,
                       place_poles, target_spectrum)
from .spectral import (GksParams, SpectralField, eval_physical_dx,
                       product_coeffs)


@dataclass(frozen=True)
class CostSpec:
    """Tracking-norm choice, control-penalty weight and horizon.

    norm_kind "C1" tracks the L2 distance, "C2" adds the first-derivative
    (H1) terms and "C3" additionally the second-derivative (H2) terms.
    """

    norm_kind: str = "C1"
    gamma: float = 1.0
    T: float = 1.0

    def __post_init__(self):
        if self.norm_kind not in ("C1", "C2", "C3"):
            raise ValueError("norm_kind must be C1, C2 or C3")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.T <= 0:
            raise ValueError("horizon must be positive")

    def weights(self, N: int) -> np.ndarray:
        """Per-coefficient Parseval weights of the tracking seminorm sum."""
        n = np.arange(1, N + 1, dtype=float)
        w_pair = np.ones(N)
        if self.norm_kind in ("C2", "C3"):
            w_pair = w_pair + n**2
        if self.norm_kind == "C3":
            w_pair = w_pair + n**4
        w = np.empty(2 * N + 1)
        w[0] = 1.0
        w[1::2] = w_pair
        w[2::2] = w_pair
        return w


@dataclass(frozen=True)
class CostReport:
    total: float
    tracking: float
    terminal: float
    penalty: float              # (gamma/2) * sum_i ||f_i||^2_{L2(0,T)}
    control_energy: float       # sum_i ||f_i||_{L2(0,T)}


def _target_states(traj: Trajectory, target) -> np.ndarray:
    if target is None:
        return np.zeros((1, traj.states.shape[1]))
    if isinstance(target, Equilibrium):
        if target.is_travelling:
            from .equilibria import translate
            return np.array([translate(target.coeffs, target.speed * t).coeffs
                             for t in traj.times])
        return target.coeffs.coeffs[None, :]
    return np.asarray(target)[None, :]


def evaluate_cost(traj: Trajectory, target, spec: CostSpec) -> CostReport:
    """Quadrature of the tracking + terminal + control-penalty functional.

    The penalty enters squared, (gamma/2) sum_i ||f_i||^2; the unsquared
    control energy sum_i ||f_i|| is reported alongside.
    """
    if abs(traj.times[-1] - spec.T) > 1e-9:
        raise ValueError("trajectory horizon differs from the cost horizon")
    err = traj.states - _target_states(traj, target)
    w = spec.weights(traj.N)
    sq = err**2 @ w                                  # ||u - ubar||^2 series
    tracking = 0.5 * float(np.trapezoid(sq, traj.times))
    terminal = 0.5 * float(sq[-1])
    if traj.controls.size:
        f_sq = np.trapezoid(traj.controls**2, traj.times, axis=0)
        penalty = 0.5 * spec.gamma * float(f_sq.sum())
        energy = float(np.sqrt(f_sq).sum())
    else:
        penalty = 0.0
        energy = 0.0
    return CostReport(tracking + terminal + penalty, tracking, terminal,
                      penalty, energy)


@dataclass(frozen=True)
class AdjointTrajectory:
    """Backward solve stored on the forward (increasing) time grid."""

    times: np.ndarray
    states: np.ndarray          # (n, 2N+1); states[-1] is the final condition

    def field(self, i: int) -> SpectralField:
        return SpectralField(self.states[i])


def adjoint_advection(p_coeffs: np.ndarray, u_coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of u * p_x, the advection source of the adjoint system."""
    return product_coeffs(u_coeffs, p_coeffs)


def solve_adjoint(traj: Trajectory, gain: FeedbackGain, p: GksParams,
                  target, spec: CostSpec) -> AdjointTrajectory:
    """Integrate the adjoint system backward from p(T) = weighted mismatch.

    In reversed time tau = T - t the system reads

        dp/dtau = A* p + u.p_x + W (u - ubar)
                  + E_q [ K' B' p + gamma K' f ],

    where A* flips the dispersion sign of the forward operator, W holds the
    tracking-norm weights, E_q embeds into the controlled coordinates, and
    the bracket is the state-derivative of the feedback forcing and of the
    squared control penalty.  The same implicit-explicit BDF2 stepping as
    the forward solver is used; the forward trajectory must be recorded at
    every step.
    """
    n_rec = len(traj.times)
    dt = traj.dt
    if n_rec < 3 or abs(traj.times[1] - traj.times[0] - dt) > 1e-12:
        raise ValueError("adjoint solve needs a densely recorded trajectory")
    p_adj = replace(p, delta=-p.delta)
    w = spec.weights(p.N)
    refs = _target_states(traj, target)
    ref_at = (lambda k: refs[k]) if len(refs) == n_rec else (lambda k: refs[0])
    K = gain.K
    q = K.shape[1]
    B = gain.built_from.actuators.matrix(p.N)

    def explicit(z, k):
        u = traj.states[k]
        ref = ref_at(k)
        f = K @ (u[:q] - ref[:q])
        rhs = adjoint_advection(z, u) + w * (u - ref)
        rhs[:q] += K.T @ (B.T @ z) + spec.gamma * (K.T @ f)
        return rhs

    euler = _ImplicitSolve(p_adj, dt, 1.0)
    bdf2 = _ImplicitSolve(p_adj, dt, 1.5)

    out = np.empty_like(traj.states)
    z_prev = w * (traj.states[-1] - ref_at(n_rec - 1))
    out[n_rec - 1] = z_prev
    e_prev = explicit(z_prev, n_rec - 1)

    z_cur = euler(z_prev + dt * e_prev)
    out[n_rec - 2] = z_cur
    e_cur = explicit(z_cur, n_rec - 2)

    for k in range(n_rec - 3, -1, -1):
        z_new = bdf2(2.0 * z_cur - 0.5 * z_prev + dt * (2.0 * e_cur - e_prev))
        amax = np.max(np.abs(z_new))
        if not np.isfinite(amax) or amax > BLOWUP_LIMIT:
            raise BlowUpError(traj.times[k], amax)
        z_prev, z_cur = z_cur, z_new
        e_prev = e_cur
        e_cur = explicit(z_cur, k)
        out[k] = z_cur
    return AdjointTrajectory(traj.times.copy(), out)


def _attenuated(coeffs: np.ndarray, acts: ActuatorSet) -> SpectralField:
    if acts.shape == "point":
        return SpectralField(coeffs)
    N = (len(coeffs) - 1) // 2
    atten = np.exp(-0.5 * (np.arange(1, N + 1) * acts.width) ** 2)
    out = coeffs.copy()
    out[1::2] *= atten
    out[2::2] *= atten
    return SpectralField(out)


def descent_direction(traj: Trajectory, adj: AdjointTrajectory,
                      acts: ActuatorSet) -> np.ndarray:
    """h = -P with P_i = int f_i(t) p_x(x_i, t) dt (trapezoid rule).

    For smoothed actuators p_x is averaged against the actuator shape,
    which attenuates mode n by the shape's Fourier factor.
    """
    if traj.controls.shape[1] != acts.m:
        raise ValueError("trajectory controls do not match the actuator set")
    px = np.empty((len(adj.times), acts.m))
    for k in range(len(adj.times)):
        px[k] = eval_physical_dx(_attenuated(adj.states[k], acts), acts.positions)
    P = np.trapezoid(traj.controls * px, traj.times, axis=0)
    return -P


def _wrap(pos: np.ndarray) -> np.ndarray:
    # x % (2pi) can round up to exactly 2pi for tiny negative x
    out = pos % (2.0 * math.pi)
    out[out >= 2.0 * math.pi] = 0.0
    return out


def project_positions(pos: np.ndarray, min_sep: float = 1e-3) -> np.ndarray:
    """Wrap into [0, 2pi) and enforce a minimum pairwise separation."""
    out = np.sort(_wrap(np.asarray(pos, dtype=float)))
    for _ in range(100):
        gaps = np.diff(np.append(out, out[0] + 2.0 * math.pi))
        bad = np.nonzero(gaps < min_sep)[0]
        if len(bad) == 0:
            break
        for i in bad:
            j = (i + 1) % len(out)
            mid = out[i] + 0.5 * gaps[i]
            out[i] = (mid - 0.5 * min_sep) % (2.0 * math.pi)
            out[j] = (mid + 0.5 * min_sep) % (2.0 * math.pi)
        out = np.sort(_wrap(out))
    return out


@dataclass(frozen=True)
class PlacementIterate:
    iteration: int
    positions: np.ndarray
    cost: float
    control_energy: float


@dataclass(frozen=True)
class PlacementProblem:
    """Everything the placement loop needs besides the starting positions."""

    params: GksParams
    u0: SpectralField
    spec: CostSpec
    target: Equilibrium | None = None
    dt: float | None = None
    closed_loop_targets: np.ndarray | None = None
    shape: str = "point"
    width: float = 0.0

    def actuators(self, positions) -> ActuatorSet:
        return ActuatorSet(np.asarray(positions, float), self.shape, self.width)

    def gain(self, acts: ActuatorSet) -> FeedbackGain:
        mats = build_matrices(acts, self.params)
        targets = self.closed_loop_targets
        if targets is None:
            targets = target_spectrum(mats, self.params)
        return place_poles(mats, np.asarray(targets, float))

    def run(self, positions, record_every: int = 1):
        """Closed-loop forward solve at the given positions."""
        acts = self.actuators(positions)
        gain = self.gain(acts)
        dt = self.dt or default_dt(self.params.nu)
        law = feedback_law(gain, self.params, self.target)
        traj = simulate(self.u0, self.params, law,
                        StepperConfig(dt, self.spec.T, record_every))
        return traj, gain, acts


def optimize_placement(x0, problem: PlacementProblem, max_iters: int = 25,
                       min_sep: float = 1e-3) -> list[PlacementIterate]:
    """Gradient descent on actuator positions with backtracking line search.

    Per iteration: forward solve, cost, adjoint, descent direction, then a
    halving line search from s0 = 0.1 * 2pi / ||h||_inf accepting the first
    strict cost decrease; positions are wrapped periodically and kept
    min_sep apart.  Stops when no step improves the cost.
    """
    positions = project_positions(np.asarray(x0, dtype=float), min_sep)
    history: list[PlacementIterate] = []
    traj, gain, acts = problem.run(positions)
    report = evaluate_cost(traj, problem.target, problem.spec)
    history.append(PlacementIterate(0, positions.copy(), report.total,
                                    report.control_energy))

    for it in range(1, max_iters + 1):
        adj = solve_adjoint(traj, gain, problem.params, problem.target,
                            problem.spec)
        h = descent_direction(traj, adj, acts)
        hmax = np.max(np.abs(h))
        if hmax < 1e-14:
            break
        s = 0.1 * 2.0 * math.pi / hmax
        accepted = None
        for _ in range(20):
            trial = project_positions(positions + s * h, min_sep)
            try:
                traj_t, gain_t, acts_t = problem.run(trial)
                report_t = evaluate_cost(traj_t, problem.target, problem.spec)
            except (BlowUpError, np.linalg.LinAlgError):
                s *= 0.5
                continue
            if report_t.total < report.total:
                accepted = (trial, traj_t, gain_t, acts_t, report_t)
                break
            s *= 0.5
        if accepted is None:
            break
        positions, traj, gain, acts, report = accepted
        history.append(PlacementIterate(it, positions.copy(), report.total,
                                        report.control_energy))
    return history
