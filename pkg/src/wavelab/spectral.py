"""Periodic Fourier discretization: grids, fields, derivatives, inner products.

A long periodic cell stands in for the real line; solitary profiles decay
exponentially, so with the default domain policy the periodization error
sits far below solver tolerances.  All quadrature is the trapezoid rule on
the uniform grid, which is spectrally exact for band-limited integrands and
makes the discrete functional identities hold to machine precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

__all__ = [
    "Grid",
    "RealField",
    "StatePair",
    "GridMismatchError",
    "make_grid",
    "same_grid",
    "deriv",
    "helmholtz_inv",
    "inner_l2",
    "inner_h1",
    "norm_l2",
    "norm_h1",
    "norm_x",
    "shift",
    "even_part",
    "even_values",
    "nonlinear_terms",
    "default_domain_length",
    "tail_magnitude",
    "warn_if_truncated",
]


class GridMismatchError(ValueError):
    """Raised when a binary field operation mixes incompatible grids."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid on [-L/2, L/2) with N (even) nodes.

    ``k`` holds the full FFT-ordered wavenumbers 2*pi*m/L with
    m = -N/2..N/2-1, ``kr`` the nonnegative half used with real transforms.
    """

    L: float
    N: int
    x: np.ndarray
    k: np.ndarray
    kr: np.ndarray

    @property
    def dx(self) -> float:
        return self.L / self.N


def make_grid(L: float, N: int) -> Grid:
    if not (L > 0 and math.isfinite(L)):
        raise ValueError(f"domain length L = {L!r} must be positive and finite")
    if N < 16 or N % 2 != 0:
        raise ValueError(f"N = {N!r} must be an even integer >= 16")
    dx = L / N
    x = -L / 2 + dx * np.arange(N)
    k = 2 * np.pi * np.fft.fftfreq(N, d=dx)
    kr = 2 * np.pi * np.fft.rfftfreq(N, d=dx)
    x.setflags(write=False)
    k.setflags(write=False)
    kr.setflags(write=False)
    return Grid(L=float(L), N=int(N), x=x, k=k, kr=kr)


def same_grid(g1: Grid, g2: Grid) -> bool:
    return g1 is g2 or (g1.N == g2.N and g1.L == g2.L)


def _check_grids(*objs) -> Grid:
    g0 = objs[0].grid
    for o in objs[1:]:
        if not same_grid(g0, o.grid):
            raise GridMismatchError(f"grid mismatch: (L={g0.L}, N={g0.N}) vs (L={o.grid.L}, N={o.grid.N})")
    return g0


@dataclass(frozen=True, eq=False)
class RealField:
    """Real-valued samples of a function on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise ValueError(f"field shape {v.shape} does not match grid N = {self.grid.N}")
        object.__setattr__(self, "values", v)

    def __add__(self, other: "RealField") -> "RealField":
        _check_grids(self, other)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        _check_grids(self, other)
        return RealField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "RealField":
        return RealField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "RealField":
        return RealField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class StatePair:
    """An (eta, u) or (psi, v) pair sharing one grid; element of H^1 x H^1."""

    first: RealField
    second: RealField

    def __post_init__(self):
        _check_grids(self.first, self.second)

    @property
    def grid(self) -> Grid:
        return self.first.grid

    @classmethod
    def from_arrays(cls, grid: Grid, first: np.ndarray, second: np.ndarray) -> "StatePair":
        return cls(RealField(grid, first), RealField(grid, second))

    @classmethod
    def zero(cls, grid: Grid) -> "StatePair":
        return cls.from_arrays(grid, np.zeros(grid.N), np.zeros(grid.N))

    def __add__(self, other: "StatePair") -> "StatePair":
        return StatePair(self.first + other.first, self.second + other.second)

    def __sub__(self, other: "StatePair") -> "StatePair":
        return StatePair(self.first - other.first, self.second - other.second)

    def __mul__(self, scalar: float) -> "StatePair":
        return StatePair(self.first * scalar, self.second * scalar)

    __rmul__ = __mul__


def deriv(f: RealField, order: int) -> RealField:
    """Spectral x-derivative of the given order (1..4).

    Odd orders zero the Nyquist mode so derivatives of real fields stay real.
    """
    if order not in (1, 2, 3, 4):
        raise ValueError(f"derivative order {order!r} not in 1..4")
    g = f.grid
    fh = np.fft.rfft(f.values)
    fh *= (1j * g.kr) ** order
    if order % 2 == 1:
        fh[-1] = 0.0
    return RealField(g, np.fft.irfft(fh, n=g.N))


def helmholtz_inv(f: RealField, b: float) -> RealField:
    """Apply (I - b dxx)^{-1} via the Fourier multiplier 1/(1 + b k^2)."""
    if b <= 0:
        raise ValueError(f"helmholtz_inv requires b > 0 (got {b!r})")
    g = f.grid
    fh = np.fft.rfft(f.values) / (1.0 + b * g.kr**2)
    return RealField(g, np.fft.irfft(fh, n=g.N))


def inner_l2(f: RealField, g: RealField) -> float:
    """Trapezoid quadrature of f*g over the periodic cell."""
    gr = _check_grids(f, g)
    return float(np.dot(f.values, g.values)) * gr.dx


def _h1_weights(grid: Grid) -> np.ndarray:
    w = np.full(grid.N // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w * (1.0 + grid.kr**2)


def inner_h1(f: RealField, g: RealField) -> float:
    """H^1 inner product, evaluated in Fourier space (Parseval-consistent)."""
    gr = _check_grids(f, g)
    fh = np.fft.rfft(f.values)
    gh = np.fft.rfft(g.values)
    return float(np.sum(_h1_weights(gr) * np.real(fh * np.conj(gh)))) * gr.L / gr.N**2


def norm_l2(f: RealField) -> float:
    return math.sqrt(max(inner_l2(f, f), 0.0))


def norm_h1(f: RealField) -> float:
    return math.sqrt(max(inner_h1(f, f), 0.0))


def norm_x(U: StatePair) -> float:
    """Energy-space norm: (|first|_{H^1}^2 + |second|_{H^1}^2)^{1/2}."""
    return math.sqrt(max(inner_h1(U.first, U.first) + inner_h1(U.second, U.second), 0.0))


def shift(f: RealField, y: float) -> RealField:
    """Translate f to f(. + y) by a Fourier phase (exact for band-limited f)."""
    g = f.grid
    fh = np.fft.rfft(f.values) * np.exp(1j * g.kr * y)
    fh[-1] = fh[-1].real
    return RealField(g, np.fft.irfft(fh, n=g.N))


def even_values(values: np.ndarray) -> np.ndarray:
    """Project samples onto functions even about x = 0 (node N/2 pairing)."""
    return 0.5 * (values + np.roll(values[::-1], 1))


def even_part(f: RealField) -> RealField:
    return RealField(f.grid, even_values(f.values))


def _pad_values(values: np.ndarray, N: int, M: int) -> np.ndarray:
    fh = np.fft.rfft(values)
    padded = np.zeros(M // 2 + 1, dtype=complex)
    padded[: N // 2 + 1] = fh
    padded[N // 2] = 0.0  # Nyquist dropped; negligible for resolved fields
    return np.fft.irfft(padded, n=M) * (M / N)


def _trunc_values(fine: np.ndarray, N: int, M: int) -> np.ndarray:
    fh = np.fft.rfft(fine)[: N // 2 + 1].copy() * (N / M)
    fh[-1] = 0.0
    return np.fft.irfft(fh, n=N)


def nonlinear_terms(first: np.ndarray, second: np.ndarray, p: float, grid: Grid,
                    dealias: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the model nonlinearities (first * second^p, second^{p+1}/(p+1)).

    For integer p the products are formed on a zero-padded grid of size
    >= (p+2)N/2 and truncated back (exact dealiasing for odd p).  Fractional
    powers cannot be dealiased by padding and are evaluated pointwise; both
    cases use sign-preserving powers so second^p is odd and second^{p+1} even.
    """
    from .model import pow_signed

    N = grid.N
    if dealias and float(p).is_integer():
        M = next_fast_len(int(math.ceil((p + 2) * N / 2)), real=True)
        if M % 2:
            M += 1
        a = _pad_values(first, N, M)
        b = _pad_values(second, N, M)
        bp = pow_signed(b, p)
        return (_trunc_values(a * bp, N, M), _trunc_values(b * bp, N, M) / (p + 1.0))
    bp = pow_signed(second, p)
    return (first * bp, second * bp / (p + 1.0))


def default_domain_length(omega: float, floor: float = 60.0) -> float:
    """Domain policy L = max(floor, 40/sqrt(1 - omega^2)).

    Profiles broaden like (1 - omega^2)^{-1/2}, so the box tracks the width
    and the tails stay below solver tolerance.
    """
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega = {omega!r} must lie in (0, 1)")
    return max(floor, 40.0 / math.sqrt(1.0 - omega * omega))


def tail_magnitude(U: StatePair, fraction: float = 0.02) -> float:
    """Largest |value| over the outer ``fraction`` of the cell on both ends."""
    n = max(1, int(U.grid.N * fraction))
    return float(max(np.abs(U.first.values[:n]).max(), np.abs(U.first.values[-n:]).max(),
                     np.abs(U.second.values[:n]).max(), np.abs(U.second.values[-n:]).max()))


def warn_if_truncated(U: StatePair, threshold: float = 1e-10, context: str = "profile") -> float:
    tail = tail_magnitude(U)
    if tail > threshold:
        warnings.warn(f"{context}: tail magnitude {tail:.3e} exceeds {threshold:.1e}; "
                      "enlarge the domain", stacklevel=2)
    return tail
