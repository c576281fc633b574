"""Pseudospectral time integration with conserved-quantity monitors.

The semi-discrete system reads, per Fourier mode,

    eta_t = -(ik/(1 + b k^2)) [ (1 - a k^2) u_hat + F(eta u^p) ],
    u_t   = -(ik/(1 + b k^2)) [ (1 - c k^2) eta_hat + F(u^{p+1})/(p+1) ].

The smoothing (1 + b k^2)^{-1} caps the linear dispersion relation

    w_d(k) = k sqrt((1 - a k^2)(1 - c k^2)) / (1 + b k^2)

at O(k) growth, so plain RK4 under a CFL bound dt <= cfl_safety / max w_d
is stable without integrating factors.  H and Q are monitored along the run;
the small-data energy bound provides a global-existence certificate with
explicit constants c0 = min(1, |a|, |c|)/2 and
c1 = 2^{-p/2} / ((p+1) min(1, |a|, |c|)) (via |f|_inf <= |f|_{H^1}/sqrt(2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functionals import hamiltonian, charge
from .model import ModelParams
from .spectral import Grid, StatePair, nonlinear_terms, norm_x

__all__ = [
    "EvolutionConfig",
    "EvolutionTrace",
    "BlowupError",
    "dispersion_omega",
    "cfl_max_dt",
    "rhs",
    "evolve",
    "conservation_check",
    "small_data_bound",
]


class BlowupError(RuntimeError):
    """Raised when the X-norm passes the blow-up guard or a NaN appears."""


def dispersion_omega(k, params: ModelParams):
    """Linear dispersion relation w_d(k) of the flat state."""
    k = np.asarray(k, dtype=float)
    out = np.abs(k) * np.sqrt((1.0 - params.a * k**2) * (1.0 - params.c * k**2)) / (1.0 + params.b * k**2)
    return out if out.ndim else float(out)


def cfl_max_dt(grid: Grid, params: ModelParams) -> float:
    """Largest dt with dt * max_k w_d(k) <= 1 on this grid."""
    return 1.0 / float(np.max(dispersion_omega(grid.kr, params)))


@dataclass(frozen=True)
class EvolutionConfig:
    """Time-stepping controls; ``dt=None`` derives dt from the CFL bound.

    ``enforce_cfl=False`` admits a deliberately unstable step (the blow-up
    guard then does the talking); everything else treats a too-large dt as a
    configuration error.
    """

    T: float
    dt: float | None = None
    cfl_safety: float = 0.5
    dealias: bool = True
    monitor_stride: int = 10
    blowup_norm: float = 1e6
    enforce_cfl: bool = True

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.monitor_stride < 1:
            raise ValueError("monitor_stride must be >= 1")

    def resolve_dt(self, grid: Grid, params: ModelParams) -> float:
        """Actual step: CFL-limited, then rounded so T is an integer multiple."""
        bound = self.cfl_safety * cfl_max_dt(grid, params)
        dt = self.dt if self.dt is not None else bound
        if self.enforce_cfl and dt > bound * (1.0 + 1e-12):
            raise ValueError(f"dt = {dt:.3e} violates the CFL bound {bound:.3e} "
                             f"(cfl_safety = {self.cfl_safety})")
        return self.T / math.ceil(self.T / dt - 1e-12)


@dataclass(frozen=True)
class EvolutionTrace:
    """Sampled conserved quantities (and optional orbit distance) along a run."""

    times: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    x_norm: np.ndarray
    orbit_distance: np.ndarray | None = None
    status: str = "ok"

    def drift(self) -> tuple[float, float]:
        h0, q0 = self.H[0], self.Q[0]
        dh = float(np.max(np.abs(self.H - h0))) / max(1.0, abs(h0))
        dq = float(np.max(np.abs(self.Q - q0))) / max(1.0, abs(q0))
        return dh, dq


def rhs(U: StatePair, params: ModelParams, dealias: bool = True,
        nonlinear: bool = True) -> StatePair:
    """Semi-discrete right-hand side of the flow."""
    g = U.grid
    eta, u = U.first.values, U.second.values
    etah = np.fft.rfft(eta)
    uh = np.fft.rfft(u)
    k = g.kr
    smooth = 1.0 / (1.0 + params.b * k**2)
    f1 = (1.0 - params.a * k**2) * uh
    f2 = (1.0 - params.c * k**2) * etah
    if nonlinear:
        n1, n2 = nonlinear_terms(eta, u, params.p, g, dealias=dealias)
        f1 = f1 + np.fft.rfft(n1)
        f2 = f2 + np.fft.rfft(n2)
    mult = -1j * k * smooth
    mult[-1] = 0.0
    return StatePair.from_arrays(g, np.fft.irfft(mult * f1, n=g.N),
                                 np.fft.irfft(mult * f2, n=g.N))


def _rhs_arrays(eta, u, g: Grid, params: ModelParams, mult, lin1, lin2, dealias):
    etah = np.fft.rfft(eta)
    uh = np.fft.rfft(u)
    n1, n2 = nonlinear_terms(eta, u, params.p, g, dealias=dealias)
    f1 = lin1 * uh + np.fft.rfft(n1)
    f2 = lin2 * etah + np.fft.rfft(n2)
    return np.fft.irfft(mult * f1, n=g.N), np.fft.irfft(mult * f2, n=g.N)


def evolve(U0: StatePair, params: ModelParams, config: EvolutionConfig,
           reference: StatePair | None = None) -> tuple[StatePair, EvolutionTrace]:
    """Classical RK4 time stepping from U0 to t = T.

    Samples H, Q, the X-norm (and, when ``reference`` is given, the orbit
    distance to its translation orbit) every ``monitor_stride`` steps.  A
    NaN or an X-norm beyond the blow-up guard aborts with the partial trace
    attached to the raised :class:`BlowupError`.
    """
    g = U0.grid
    dt = config.resolve_dt(g, params)
    n_steps = round(config.T / dt)
    k = g.kr
    smooth = 1.0 / (1.0 + params.b * k**2)
    mult = -1j * k * smooth
    mult[-1] = 0.0
    lin1 = (1.0 - params.a * k**2)
    lin2 = (1.0 - params.c * k**2)

    if reference is not None:
        from .stability import orbit_distance

    eta = U0.first.values.copy()
    u = U0.second.values.copy()

    times, hs, qs, xs, dists = [], [], [], [], []

    def sample(t):
        U = StatePair.from_arrays(g, eta, u)
        times.append(t)
        hs.append(hamiltonian(U, params))
        qs.append(charge(U, params))
        xs.append(norm_x(U))
        if reference is not None:
            dists.append(orbit_distance(U, reference)[0])
        return xs[-1]

    sample(0.0)
    status = "ok"
    # overflow in an unstable run is detected by the isfinite guard below,
    # not by numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n_steps + 1):
            k1 = _rhs_arrays(eta, u, g, params, mult, lin1, lin2, config.dealias)
            k2 = _rhs_arrays(eta + 0.5 * dt * k1[0], u + 0.5 * dt * k1[1], g, params, mult, lin1, lin2, config.dealias)
            k3 = _rhs_arrays(eta + 0.5 * dt * k2[0], u + 0.5 * dt * k2[1], g, params, mult, lin1, lin2, config.dealias)
            k4 = _rhs_arrays(eta + dt * k3[0], u + dt * k3[1], g, params, mult, lin1, lin2, config.dealias)
            eta = eta + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            u = u + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(u))):
                status = f"nan at step {step} (t = {step * dt:.6g})"
                break
            if step % config.monitor_stride == 0 or step == n_steps:
                xn = sample(step * dt)
                if xn > config.blowup_norm:
                    status = f"blowup at step {step} (t = {step * dt:.6g}, |U|_X = {xn:.3e})"
                    break

    trace = EvolutionTrace(
        times=np.array(times), H=np.array(hs), Q=np.array(qs), x_norm=np.array(xs),
        orbit_distance=np.array(dists) if reference is not None else None,
        status=status,
    )
    if status != "ok":
        err = BlowupError(status)
        err.trace = trace
        raise err
    return StatePair.from_arrays(g, eta, u), trace


@dataclass(frozen=True)
class ConservationResult:
    passed: bool
    h_drift: float
    q_drift: float
    tol: float

    def as_dict(self) -> dict:
        return {"passed": self.passed, "h_drift": self.h_drift,
                "q_drift": self.q_drift, "tol": self.tol}


def conservation_check(trace: EvolutionTrace, tol: float = 1e-8) -> ConservationResult:
    """Max relative drift of H and Q along the trace against ``tol``."""
    if len(trace.times) == 0:
        raise ValueError("empty trace")
    dh, dq = trace.drift()
    return ConservationResult(passed=(dh <= tol and dq <= tol), h_drift=dh, q_drift=dq, tol=tol)


def small_data_bound(U: StatePair, params: ModelParams) -> tuple[float, float, bool]:
    """Global-existence certificate c0 |U|_X^2 (1 - c1 |U|_X^p) <= H(U).

    Returns (lhs, H, satisfied).  The constants are the explicit choices
    c0 = min(1, |a|, |c|)/2, c1 = 2^{-p/2}/((p+1) min(1, |a|, |c|)).
    """
    mu = min(1.0, abs(params.a), abs(params.c))
    c0 = 0.5 * mu
    c1 = 2.0 ** (-params.p / 2.0) / ((params.p + 1.0) * mu)
    n = norm_x(U)
    lhs = c0 * n**2 * (1.0 - c1 * n**params.p)
    rhs_val = hamiltonian(U, params)
    return lhs, rhs_val, lhs <= rhs_val + 1e-12 * max(1.0, abs(rhs_val))
