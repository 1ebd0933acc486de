"""Fourier-Galerkin representation of mean-zero 2pi-periodic fields.

A field is stored as a real coefficient vector of length 2N+1 in the
ordering [a0, a1s, a1c, ..., aNs, aNc], where

    u(x) = a0 / sqrt(2*pi) + sum_n (ans * sin(nx) + anc * cos(nx)) / sqrt(pi).

The basis {1/sqrt(2pi), sin(nx)/sqrt(pi), cos(nx)/sqrt(pi)} is orthonormal
on (0, 2pi), so Parseval holds coefficient-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)


def sin_index(n: int) -> int:
    """Slot of the sin(nx) coefficient, n >= 1."""
    return 2 * n - 1


def cos_index(n: int) -> int:
    """Slot of the cos(nx) coefficient (n = 0 is the mean slot)."""
    return 2 * n


@dataclass(frozen=True)
class SpectralField:
    """Truncated trigonometric series with orthonormal-basis coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or len(c) % 2 == 0:
            raise ValueError("coefficient vector must have odd length 2N+1")
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @classmethod
    def zeros(cls, N: int) -> "SpectralField":
        return cls(np.zeros(2 * N + 1))

    @classmethod
    def from_modes(cls, N: int, sines=None, cosines=None, mean: float = 0.0) -> "SpectralField":
        """Build a field from {mode: coefficient} maps (orthonormal basis)."""
        c = np.zeros(2 * N + 1)
        c[0] = mean
        for n, v in (sines or {}).items():
            c[sin_index(n)] = v
        for n, v in (cosines or {}).items():
            c[cos_index(n)] = v
        return cls(c)

    def sin(self, n: int) -> float:
        return self.coeffs[sin_index(n)]

    def cos(self, n: int) -> float:
        return self.coeffs[cos_index(n)]

    def truncate(self, N: int) -> "SpectralField":
        """Project onto the first N modes (pad with zeros if N grows)."""
        c = np.zeros(2 * N + 1)
        k = min(len(c), len(self.coeffs))
        c[:k] = self.coeffs[:k]
        return SpectralField(c)


@dataclass(frozen=True)
class GksParams:
    """Equation parameters and truncation order.

    nu    -- fourth-order (viscous) coefficient, > 0
    mu    -- electric-field strength, >= 0
    delta -- dispersion coefficient (signed)
    N     -- Galerkin truncation (number of sine/cosine pairs)
    """

    nu: float
    mu: float = 0.0
    delta: float = 0.0
    N: int = 32

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        l = count_unstable(self)
        if self.N < 2 * l + 2:
            raise ValueError(
                f"N={self.N} under-resolves the instability (l={l}); need N >= {2 * l + 2}"
            )


def linear_symbol(k: int, p: GksParams) -> complex:
    """Growth rate of mode k >= 0: k^2 + mu*k^3 - nu*k^4 + i*delta*k^3."""
    if k < 0:
        raise ValueError("mode index must be nonnegative")
    return k**2 + p.mu * k**3 - p.nu * k**4 + 1j * p.delta * k**3


def critical_wavenumber(p) -> float:
    return (p.mu + math.sqrt(p.mu**2 + 4.0 * p.nu)) / (2.0 * p.nu)


def count_unstable(p) -> int:
    """Integer part l of the cutoff wavenumber; 2l+1 modes are unstable."""
    return int(math.floor(critical_wavenumber(p)))


def default_mode_count(l: int) -> int:
    """Smallest of 32/64/128 resolving 6 harmonics per unstable mode."""
    for N in (32, 64, 128):
        if N >= 6 * l:
            return N
    return 128


def hilbert(u: SpectralField) -> SpectralField:
    """Periodic Hilbert transform: sin -> -cos, cos -> sin, mean -> 0."""
    out = np.empty_like(u.coeffs)
    out[0] = 0.0
    out[1::2] = u.coeffs[2::2]       # new sin coeff = old cos coeff
    out[2::2] = -u.coeffs[1::2]      # new cos coeff = -old sin coeff
    return SpectralField(out)


def to_complex(coeffs: np.ndarray) -> np.ndarray:
    """Complex exponential coefficients c_k, k = -N..N (index k+N)."""
    N = (len(coeffs) - 1) // 2
    a = coeffs[1::2]
    b = coeffs[2::2]
    c = np.zeros(2 * N + 1, dtype=complex)
    c[N] = coeffs[0] / SQRT_2PI
    c[N + 1:] = (b - 1j * a) / (2.0 * SQRT_PI)
    c[:N] = ((b + 1j * a) / (2.0 * SQRT_PI))[::-1]
    return c


def from_complex(c: np.ndarray) -> np.ndarray:
    """Inverse of ``to_complex``; drops the (numerically zero) imaginary dust."""
    N = (len(c) - 1) // 2
    out = np.empty(2 * N + 1)
    out[0] = c[N].real * SQRT_2PI
    pos = c[N + 1:]
    out[1::2] = -2.0 * SQRT_PI * pos.imag
    out[2::2] = 2.0 * SQRT_PI * pos.real
    return out


def nonlinear_galerkin(u: SpectralField) -> SpectralField:
    """Galerkin coefficients of u * u_x, truncated at N.

    Computed as an exact convolution of exponential-basis coefficients;
    products landing above mode N are discarded (Galerkin projection).
    """
    return SpectralField(nonlinear_coeffs(u.coeffs))


def nonlinear_coeffs(coeffs: np.ndarray) -> np.ndarray:
    N = (len(coeffs) - 1) // 2
    c = to_complex(coeffs)
    k = np.arange(-N, N + 1)
    dc = 1j * k * c
    w = np.convolve(c, dc)          # modes -2N..2N
    out = from_complex(w[N:3 * N + 1])
    out[0] = 0.0                    # integral of u*u_x vanishes exactly
    return out


def product_coeffs(a: np.ndarray, bx: np.ndarray) -> np.ndarray:
    """Galerkin coefficients of a(x) * d/dx b(x) for two coefficient vectors."""
    N = (len(a) - 1) // 2
    ca = to_complex(a)
    k = np.arange(-N, N + 1)
    cb = 1j * k * to_complex(bx)
    w = np.convolve(ca, cb)
    return from_complex(w[N:3 * N + 1])


def eval_physical(u: SpectralField, x, deriv: int = 0):
    """Pointwise evaluation of the series (or its deriv-th derivative)."""
    x = np.asarray(x, dtype=float)
    n = np.arange(1, u.N + 1)
    a = u.coeffs[1::2]
    b = u.coeffs[2::2]
    nx = np.multiply.outer(x, n)
    fac = n.astype(float) ** deriv
    # d/dx rotates (sin, cos) -> (cos, -sin); apply the rotation deriv times
    s, c = np.sin(nx), np.cos(nx)
    q = deriv % 4
    if q == 0:
        val = s @ (a * fac) + c @ (b * fac)
    elif q == 1:
        val = c @ (a * fac) - s @ (b * fac)
    elif q == 2:
        val = -s @ (a * fac) - c @ (b * fac)
    else:
        val = -c @ (a * fac) + s @ (b * fac)
    res = val / SQRT_PI
    if deriv == 0:
        res = res + u.coeffs[0] / SQRT_2PI
    return float(res) if res.ndim == 0 else res


def eval_physical_dx(u: SpectralField, x):
    return eval_physical(u, x, deriv=1)


def eval_physical_dxx(u: SpectralField, x):
    return eval_physical(u, x, deriv=2)


def norms(u: SpectralField):
    """(L2 norm, H1 seminorm, H2 seminorm) via Parseval."""
    return tuple(norms_from_coeffs(u.coeffs))


def norms_from_coeffs(coeffs: np.ndarray) -> np.ndarray:
    N = (len(coeffs) - 1) // 2
    n = np.arange(1, N + 1, dtype=float)
    pair = coeffs[1::2] ** 2 + coeffs[2::2] ** 2
    l2 = math.sqrt(coeffs[0] ** 2 + pair.sum())
    h1 = math.sqrt((n**2 * pair).sum())
    h2 = math.sqrt((n**4 * pair).sum())
    return np.array([l2, h1, h2])


def l2_norm(coeffs: np.ndarray) -> float:
    return float(np.linalg.norm(coeffs))
