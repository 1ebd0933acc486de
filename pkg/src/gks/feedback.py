"""Point-actuated linear state feedback for the gKS Galerkin system.

The first m coefficient slots (mean plus the low sin/cos pairs) form the
"unstable block".  With m point actuators the influence matrix B_u on that
block is square and generically invertible, so the gain

    K = B_u^{-1} (Lambda* - A_u)

assigns the closed-loop unstable spectrum exactly (the block becomes the
diagonal Lambda*, so its eigenvector condition number is 1).  The controls
are f(t) = K (z_u(t) - z_u_target(t)) and enter the dynamics as the forcing
sum_i b_i(x) f_i(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibria import Equilibrium, translate
from .spectral import (SQRT_2PI, SQRT_PI, GksParams, SpectralField,
                       eval_physical_dx)

_COND_LIMIT = 1e10


@dataclass(frozen=True)
class ActuatorSet:
    """m point actuators at distinct positions in (0, 2pi).

    shape is "point" (delta evaluations) or "smoothed"; the smoothed variant
    attenuates mode n by exp(-n^2 width^2 / 2), the Fourier transform of a
    narrow wrapped Gaussian.
    """

    positions: np.ndarray
    shape: str = "point"
    width: float = 0.0

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 1 or len(pos) < 1:
            raise ValueError("need at least one actuator position")
        if self.shape not in ("point", "smoothed"):
            raise ValueError("shape must be 'point' or 'smoothed'")
        if self.shape == "smoothed" and self.width <= 0:
            raise ValueError("smoothed actuators need a positive width")
        wrapped = np.sort(pos % (2.0 * math.pi))
        gaps = np.diff(np.append(wrapped, wrapped[0] + 2.0 * math.pi))
        if len(pos) > 1 and gaps.min() < 1e-12:
            raise ValueError("actuator positions must be distinct modulo 2pi")
        object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        return len(self.positions)

    def matrix(self, N: int) -> np.ndarray:
        """Influence matrix (2N+1, m): column i is the basis evaluated at x_i."""
        B = np.empty((2 * N + 1, self.m))
        B[0, :] = 1.0 / SQRT_2PI
        n = np.arange(1, N + 1)
        nx = np.multiply.outer(n, self.positions)
        atten = 1.0
        if self.shape == "smoothed":
            atten = np.exp(-0.5 * (n * self.width) ** 2)[:, None]
        B[1::2, :] = atten * np.sin(nx) / SQRT_PI
        B[2::2, :] = atten * np.cos(nx) / SQRT_PI
        return B


def equispaced_actuators(m: int, offset: float = 0.0, shape: str = "point",
                         width: float = 0.0) -> ActuatorSet:
    pos = offset + 2.0 * math.pi * np.arange(m) / m
    return ActuatorSet(pos % (2.0 * math.pi), shape, width)


@dataclass(frozen=True)
class ControlMatrices:
    """Partition of the linear operator and actuator influence at order m."""

    A_u: np.ndarray             # (m, m) diagonal growth-rate block
    A_s: np.ndarray             # (2N+1-m,) remaining diagonal entries
    B_u: np.ndarray             # (m, m)
    B_s: np.ndarray             # (2N+1-m, m)
    actuators: ActuatorSet
    condition_number: float = field(default=float("nan"))

    @property
    def m(self) -> int:
        return self.A_u.shape[0]


@dataclass(frozen=True)
class FeedbackGain:
    """Gain K with its assigned spectrum and the blocks it was built from."""

    K: np.ndarray
    target_eigs: np.ndarray
    built_from: ControlMatrices

    @property
    def m(self) -> int:
        return self.K.shape[0]


def growth_rates(p: GksParams) -> np.ndarray:
    """Diagonal of the linear operator in coefficient ordering (no dispersion)."""
    sigma = np.empty(2 * p.N + 1)
    n = np.arange(1, p.N + 1, dtype=float)
    s = -p.nu * n**4 + p.mu * n**3 + n**2
    sigma[0] = 0.0
    sigma[1::2] = s
    sigma[2::2] = s
    return sigma


def linear_operator(p: GksParams) -> np.ndarray:
    """Full (2N+1)-square linear matrix, including dispersive rotation blocks."""
    A = np.diag(growth_rates(p))
    if p.delta != 0.0:
        n = np.arange(1, p.N + 1, dtype=float)
        d = p.delta * n**3
        for k in range(1, p.N + 1):
            A[2 * k - 1, 2 * k] -= d[k - 1]
            A[2 * k, 2 * k - 1] += d[k - 1]
    return A


def build_matrices(acts: ActuatorSet, p: GksParams,
                   block_size: int | None = None) -> ControlMatrices:
    """Partition the diagonal linear operator and B at the controlled block.

    The block covers the first ``block_size`` coefficient slots (default m,
    the square case).  A larger block lets fewer actuators place more
    eigenvalues, as long as the pair stays controllable.
    """
    m = acts.m
    q = block_size if block_size is not None else m
    if q < m:
        raise ValueError("block size must be at least the actuator count")
    if q > 2 * p.N + 1:
        raise ValueError("block larger than the Galerkin system")
    sigma = growth_rates(p)
    B = acts.matrix(p.N)
    B_u, B_s = B[:q, :], B[q:, :]
    cond = float(np.linalg.cond(B_u))
    return ControlMatrices(np.diag(sigma[:q]), sigma[q:], B_u, B_s, acts, cond)


def target_spectrum(mats: ControlMatrices, p: GksParams) -> np.ndarray:
    """Assigned closed-loop eigenvalues for the unstable block.

    The constant mode goes to -1; each growing rate lam > 0 flips to -lam
    (or to -10*delta*lam when dispersion is present); already-decaying
    entries are kept.
    """
    diag = np.diag(mats.A_u)
    targets = diag.copy()
    targets[0] = -1.0
    pos = diag > 0
    if p.delta > 0:
        targets[pos] = -10.0 * p.delta * diag[pos]
    else:
        targets[pos] = -diag[pos]
    return targets


def push_targets(targets: np.ndarray, ubar: SpectralField,
                 margin: float = 0.1) -> np.ndarray:
    """Shift targets left so the decay rate dominates the target's shear.

    Stabilising a non-uniform state requires every assigned rate to beat
    half the maximum slope of the target profile; rates that are too slow
    (including marginal ones) are moved to the floor.
    """
    x = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
    floor = 0.5 * float(np.max(np.abs(eval_physical_dx(ubar, x)))) + margin
    return np.minimum(targets, -floor)


def place_poles(mats: ControlMatrices, targets) -> FeedbackGain:
    """Gain K putting the controlled-block spectrum at ``targets``.

    Square B_u: exact assignment K = B_u^{-1} (Lambda* - A_u), making the
    block diagonal.  Rectangular B_u (block larger than the actuator
    count): iterative placement; coincident targets are spread slightly
    since the algorithm needs multiplicities below the input rank.
    """
    targets = np.asarray(targets, dtype=float)
    q = mats.A_u.shape[0]
    if targets.shape != (q,):
        raise ValueError("need exactly one target per controlled coordinate")
    if mats.condition_number > _COND_LIMIT or not math.isfinite(mats.condition_number):
        raise np.linalg.LinAlgError(
            f"B_u too ill-conditioned for pole placement "
            f"(cond = {mats.condition_number:.3g})")
    if q == mats.actuators.m:
        K = np.linalg.solve(mats.B_u, np.diag(targets) - mats.A_u)
    else:
        from scipy.signal import place_poles as _scipy_place
        order = np.argsort(targets)
        spread = targets.copy()
        for rank, i in enumerate(order):    # break exact ties
            spread[i] -= 1e-2 * rank
        result = _scipy_place(mats.A_u, mats.B_u, spread)
        K = -result.gain_matrix
        targets = spread
    return FeedbackGain(K, targets, mats)


def gain_norm_bound(gain: FeedbackGain) -> float:
    """Upper bound (||A_u|| + max|target|) / sigma_min(B_u) on ||K||_2."""
    mats = gain.built_from
    smin = np.linalg.svd(mats.B_u, compute_uv=False)[-1]
    return (np.linalg.norm(mats.A_u, 2) + np.max(np.abs(gain.target_eigs))) / smin


@dataclass(frozen=True)
class FeedbackForcing:
    """Control law f(t) = K (z_u(t) - z_target(t)) in the dynamics protocol.

    target_coeffs is None for the zero target, a fixed coefficient vector
    for steady targets, or paired with speed != 0 for travelling targets
    (the reference then rotates with the wave).
    """

    matrix: np.ndarray          # (2N+1, m) actuator influence
    K: np.ndarray               # (m, m)
    target_coeffs: np.ndarray | None = None
    speed: float = 0.0

    def reference(self, t: float) -> np.ndarray | None:
        if self.target_coeffs is None or self.speed == 0.0:
            return self.target_coeffs
        return translate(SpectralField(self.target_coeffs), self.speed * t).coeffs

    def amplitudes(self, t: float, coeffs: np.ndarray) -> np.ndarray:
        q = self.K.shape[1]
        z = coeffs[:q]
        ref = self.reference(t)
        if ref is not None:
            z = z - ref[:q]
        return self.K @ z


def feedback_law(gain: FeedbackGain, p: GksParams,
                 target: Equilibrium | None = None) -> FeedbackForcing:
    """Assemble the closed-loop forcing for a zero/steady/travelling target."""
    B = gain.built_from.actuators.matrix(p.N)
    if target is None:
        return FeedbackForcing(B, gain.K)
    return FeedbackForcing(B, gain.K, target.coeffs.coeffs.copy(), target.speed)


def closed_loop_matrix(A: np.ndarray, B: np.ndarray, K: np.ndarray) -> np.ndarray:
    """A + B K acting on the leading block coordinates."""
    m = K.shape[1]
    Acl = A.copy()
    Acl[:, :m] += B @ K
    return Acl


@dataclass(frozen=True)
class MarginReport:
    zeta: float
    lower_bound: float
    omega_star: float
    boundary_warning: bool = False


def closed_loop_margin(A: np.ndarray, B: np.ndarray, K: np.ndarray,
                       omega_grid: np.ndarray | None = None) -> MarginReport:
    """Distance to instability: min over s = i*omega of sigma_min(sI - Acl).

    Scanned on a log grid (default 512 points spanning the closed-loop
    frequency content) and polished by golden-section search; also reports
    the analytic floor min_j |Re lambda_j| / kappa(X).
    """
    Acl = closed_loop_matrix(A, B, K)
    eigs, X = np.linalg.eig(Acl)
    if np.max(eigs.real) >= 0:
        raise ValueError("closed loop is not stable; margin undefined")
    kappa = float(np.linalg.cond(X))
    lower = float(np.min(-eigs.real) / kappa)

    dim = Acl.shape[0]
    I = np.eye(dim)

    def smin(w):
        return float(np.linalg.svd(1j * w * I - Acl, compute_uv=False)[-1])

    if omega_grid is None:
        w_hi = 10.0 * max(float(np.max(np.abs(eigs))), 1.0)
        omega_grid = np.logspace(-3.0, math.log10(w_hi), 512)
    vals = np.array([smin(w) for w in omega_grid])
    i = int(np.argmin(vals))
    boundary = i in (0, len(omega_grid) - 1)
    lo = omega_grid[max(i - 1, 0)]
    hi = omega_grid[min(i + 1, len(omega_grid) - 1)]
    for _ in range(60):
        m1 = lo + 0.381966 * (hi - lo)
        m2 = hi - 0.381966 * (hi - lo)
        if smin(m1) < smin(m2):
            hi = m2
        else:
            lo = m1
    w_star = 0.5 * (lo + hi)
    zeta = min(smin(w_star), smin(0.0), float(vals[i]))
    if smin(0.0) <= zeta:
        w_star = 0.0
    return MarginReport(zeta, lower, float(w_star), boundary)


def uncertainty_norm(eps1: float, eps2: float, N: int,
                     zeta: float | None = None):
    """Size of the structured model perturbation, and a stability verdict.

    Relative errors eps1 (in the fourth-order coefficient) and eps2 (in the
    second-order one) perturb mode k's growth rate by eps1*k^4 - eps2*k^2
    per sin/cos pair, giving the squared norm 2 sum k^6 (eps1^2 k^2
    - 2 eps1 eps2 k + eps2^2) over k <= N/2.  Stability is guaranteed while
    the norm stays below the closed-loop margin.
    """
    k = np.arange(1, N // 2 + 1, dtype=float)
    sq = 2.0 * np.sum(k**6 * (eps1**2 * k**2 - 2.0 * eps1 * eps2 * k + eps2**2))
    norm = math.sqrt(max(sq, 0.0))
    if zeta is None:
        return norm, None
    return norm, norm < zeta


def lyapunov_monitor(traj, target: Equilibrium | None = None,
                     transient: float = 1.0, tol: float = 1e-8):
    """Time derivative of the squared tracking error, with violation flags.

    Returns (times, dV/dt, indices of post-transient steps where the
    derivative exceeds +tol).  The reference rotates with the wave for
    travelling targets.
    """
    if target is None:
        err = traj.states
    elif target.is_travelling:
        err = np.array([s - translate(target.coeffs, target.speed * t).coeffs
                        for t, s in zip(traj.times, traj.states)])
    else:
        err = traj.states - target.coeffs.coeffs
    V = 0.5 * np.sum(err**2, axis=1)
    dV = np.gradient(V, traj.times)
    flagged = np.nonzero((traj.times > transient) & (dV > tol))[0]
    return traj.times, dV, flagged
