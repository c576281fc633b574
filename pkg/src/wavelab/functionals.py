"""Conserved quantities and variational functionals on the energy space.

All integrals share one quadrature (trapezoid on the periodic cell), so the
algebraic relations between them -- Iw = I1 + I2w, Jw = Iw + G,
Kw = 2 Iw + (p+2) G, and Jw = 2 (H + omega Q) -- hold discretely to
rounding, not merely up to discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams, pow_signed
from .spectral import Grid, StatePair, deriv

__all__ = [
    "FunctionalReport",
    "hamiltonian",
    "charge",
    "i1",
    "i2w",
    "iw",
    "gfun",
    "jw",
    "kw",
    "functional_report",
    "coercivity_bounds",
    "quadratic_symbol",
]


def _quad(grid: Grid, integrand: np.ndarray) -> float:
    return float(np.sum(integrand)) * grid.dx


def hamiltonian(U: StatePair, params: ModelParams) -> float:
    """H = (1/2) int eta^2 - c eta_x^2 + u^2 - a u_x^2 + 2/(p+1) eta u^{p+1}."""
    g = U.grid
    eta, u = U.first.values, U.second.values
    eta_x = deriv(U.first, 1).values
    u_x = deriv(U.second, 1).values
    cubic = (2.0 / (params.p + 1.0)) * eta * u * pow_signed(u, params.p)
    return 0.5 * _quad(g, eta**2 - params.c * eta_x**2 + u**2 - params.a * u_x**2 + cubic)


def charge(U: StatePair, params: ModelParams) -> float:
    """Q = -int ((I - b dxx) eta) u = -int (eta u + b eta_x u_x)."""
    g = U.grid
    eta_x = deriv(U.first, 1).values
    u_x = deriv(U.second, 1).values
    return -_quad(g, U.first.values * U.second.values + params.b * eta_x * u_x)


def i1(U: StatePair, params: ModelParams) -> float:
    """I1 = int psi^2 - c psi_x^2 + v^2 - a v_x^2 (the omega-free quadratic part)."""
    g = U.grid
    psi_x = deriv(U.first, 1).values
    v_x = deriv(U.second, 1).values
    return _quad(g, U.first.values**2 - params.c * psi_x**2 + U.second.values**2 - params.a * v_x**2)


def i2w(U: StatePair, params: ModelParams, omega: float) -> float:
    """I2,omega = -2 omega int (psi v + b psi_x v_x)."""
    g = U.grid
    psi_x = deriv(U.first, 1).values
    v_x = deriv(U.second, 1).values
    return -2.0 * omega * _quad(g, U.first.values * U.second.values + params.b * psi_x * v_x)


def iw(U: StatePair, params: ModelParams, omega: float) -> float:
    return i1(U, params) + i2w(U, params, omega)


def gfun(U: StatePair, params: ModelParams) -> float:
    """G = 2/(p+1) int psi v^{p+1} (homogeneous of degree p+2)."""
    g = U.grid
    v = U.second.values
    return (2.0 / (params.p + 1.0)) * _quad(g, U.first.values * v * pow_signed(v, params.p))


def jw(U: StatePair, params: ModelParams, omega: float) -> float:
    return iw(U, params, omega) + gfun(U, params)


def kw(U: StatePair, params: ModelParams, omega: float) -> float:
    """K_omega = <J_omega'(U), U> = 2 Iw + (p+2) G by homogeneity."""
    return 2.0 * iw(U, params, omega) + (params.p + 2.0) * gfun(U, params)


@dataclass(frozen=True)
class FunctionalReport:
    """All functional values of one state at one speed."""

    omega: float
    H: float
    Q: float
    I1: float
    I2w: float
    Iw: float
    G: float
    Jw: float
    Kw: float

    def as_dict(self) -> dict:
        return {
            "omega": self.omega, "H": self.H, "Q": self.Q, "I1": self.I1,
            "I2w": self.I2w, "Iw": self.Iw, "G": self.G, "Jw": self.Jw, "Kw": self.Kw,
        }


def functional_report(U: StatePair, params: ModelParams, omega: float) -> FunctionalReport:
    H = hamiltonian(U, params)
    Q = charge(U, params)
    v1 = i1(U, params)
    v2 = i2w(U, params, omega)
    G = gfun(U, params)
    Iw_val = v1 + v2
    return FunctionalReport(omega=omega, H=H, Q=Q, I1=v1, I2w=v2, Iw=Iw_val,
                            G=G, Jw=Iw_val + G, Kw=2.0 * Iw_val + (params.p + 2.0) * G)


def quadratic_symbol(params: ModelParams, omega: float, k: np.ndarray) -> np.ndarray:
    """Per-mode 2x2 matrix of the quadratic form Iw in Fourier variables.

    Iw(U) = sum_k (psi_k, v_k)^* A(k) (psi_k, v_k) with
    A(k) = [[1 + |c| k^2, -omega (1 + b k^2)], [-omega (1 + b k^2), 1 + |a| k^2]].
    """
    k2 = np.asarray(k) ** 2
    A = np.empty(k2.shape + (2, 2))
    A[..., 0, 0] = 1.0 - params.c * k2
    A[..., 1, 1] = 1.0 - params.a * k2
    A[..., 0, 1] = A[..., 1, 0] = -omega * (1.0 + params.b * k2)
    return A


def coercivity_bounds(params: ModelParams, omega: float, grid: Grid) -> tuple[float, float]:
    """Constants M1, M2 with M1 |U|_X^2 <= Iw(U) <= M2 |U|_X^2 on the grid.

    M2 = max(1 + |omega|, |c| + b|omega|, |a| + b|omega|).  M1 is the minimum
    over grid wavenumbers of the smallest eigenvalue of the Iw symbol divided
    by (1 + k^2); M1 <= 0 signals that omega left the admissible window.
    """
    w = abs(omega)
    M2 = max(1.0 + w, abs(params.c) + params.b * w, abs(params.a) + params.b * w)
    k2 = grid.kr**2
    alpha = 1.0 - params.c * k2
    delta = 1.0 - params.a * k2
    gamma = -omega * (1.0 + params.b * k2)
    lam_min = 0.5 * (alpha + delta) - np.sqrt(0.25 * (alpha - delta) ** 2 + gamma**2)
    M1 = float(np.min(lam_min / (1.0 + k2)))
    return M1, M2
