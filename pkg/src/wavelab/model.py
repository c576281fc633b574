"""Model coefficients, admissibility checks, and the speed <-> scaling relations.

The system under study is the coupled BBM-type water-wave model

    (I - b dxx) eta_t + dx u + a dxxx u + dx(eta u^p)            = 0,
    (I - b dxx) u_t   + dx eta + c dxxx eta + dx(u^{p+1})/(p+1)  = 0,

with b > 0, a < 0, c < 0 and nonlinearity exponent p >= 1.  Everything
downstream (functionals, solvers, evolution) is parameterized by a
:class:`ModelParams` instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "ModelParams",
    "SpeedPoint",
    "Check",
    "ValidationReport",
    "LEVEL_EXISTENCE",
    "LEVEL_STABILITY",
    "REFERENCE_PARAMS",
    "validate",
    "sigma_from_abc",
    "omega_window",
    "eps_from_omega",
    "omega_from_eps",
    "pow_signed",
    "is_odd_odd_rational",
]

LEVEL_EXISTENCE = "existence"
LEVEL_STABILITY = "stability"


def sigma_from_abc(a: float, b: float, c: float) -> float:
    """Surface-tension parameter sigma = 1/3 - (a + 2b + c) (d = b)."""
    return 1.0 / 3.0 - (a + 2.0 * b + c)


@dataclass(frozen=True)
class ModelParams:
    """Coefficients (a, b, c) with b = d, plus the nonlinearity exponent p."""

    a: float
    b: float
    c: float
    p: float = 1.0

    @property
    def sigma(self) -> float:
        return sigma_from_abc(self.a, self.b, self.c)

    @property
    def m(self) -> float:
        """Long-wave dispersion coefficient sigma - 1/3 = -(a + 2b + c)."""
        return self.sigma - 1.0 / 3.0


#: Convenient round-number default satisfying the stability regime
#: (sigma = 1/2, admissible speeds 0 < omega < 1).
REFERENCE_PARAMS = ModelParams(a=-1.0 / 6.0, b=1.0 / 12.0, c=-1.0 / 6.0, p=1.0)


def is_odd_odd_rational(p: float, max_den: int = 99, tol: float = 1e-12) -> bool:
    """True when p is (numerically) a ratio of two odd integers.

    The underlying model assumes p = p1/p2 with p1, p2 odd so that u^p is
    odd and u^{p+1} is even.  ``pow_signed`` extends that parity convention
    to every real p >= 1; this predicate only classifies the input.
    """
    if not math.isfinite(p) or p <= 0:
        return False
    frac = Fraction(p).limit_denominator(max_den)
    if abs(float(frac) - p) > tol * max(1.0, abs(p)):
        return False
    return frac.numerator % 2 == 1 and frac.denominator % 2 == 1


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    level: str
    checks: tuple[Check, ...]
    passed: bool
    notes: tuple[str, ...] = ()

    def failed_names(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
            "notes": list(self.notes),
        }


def validate(params: ModelParams, level: str = LEVEL_EXISTENCE) -> ValidationReport:
    """Check the inequalities that delimit the admissible coefficient regime.

    ``existence`` requires b > 0, a < 0, c < 0 and 2b < -a - c; ``stability``
    additionally requires b <= sqrt(ac).  Non-finite inputs are rejected.
    """
    if level not in (LEVEL_EXISTENCE, LEVEL_STABILITY):
        raise ValueError(f"unknown validation level {level!r}")
    vals = (params.a, params.b, params.c, params.p)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"non-finite model parameters: a={params.a} b={params.b} c={params.c} p={params.p}")

    a, b, c, p = params.a, params.b, params.c, params.p
    checks = [
        Check("b_positive", b > 0, f"b = {b:.6g} must be > 0"),
        Check("a_negative", a < 0, f"a = {a:.6g} must be < 0"),
        Check("c_negative", c < 0, f"c = {c:.6g} must be < 0"),
        Check("p_at_least_one", p >= 1, f"p = {p:.6g} must be >= 1"),
        Check("surface_tension", 2 * b < -a - c, f"2b = {2 * b:.6g} must be < -a-c = {-a - c:.6g}"),
    ]
    if level == LEVEL_STABILITY:
        sqrt_ac = math.sqrt(a * c) if a * c > 0 else float("nan")
        checks.append(Check("b_le_sqrt_ac", a * c > 0 and b <= sqrt_ac, f"b = {b:.6g} must be <= sqrt(ac) = {sqrt_ac:.6g}"))

    notes = []
    if not is_odd_odd_rational(p):
        notes.append(f"p = {p:.6g} is not an odd/odd rational: outside model assumptions, "
                     "powers are taken sign-preserving (see pow_signed)")
    return ValidationReport(level=level, checks=tuple(checks), passed=all(c.passed for c in checks), notes=tuple(notes))


def omega_window(params: ModelParams) -> tuple[float, float]:
    """Admissible speed interval (0, omega_max) with omega_max = min(1, sqrt(ac)/b).

    Only the sign pattern b > 0, a < 0, c < 0 is required here; the window is
    meaningful on its own even when the surface-tension inequality fails.
    """
    a, b, c = params.a, params.b, params.c
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(c)):
        raise ValueError("non-finite model parameters")
    if b <= 0 or a >= 0 or c >= 0:
        raise ValueError(f"speed window needs b > 0, a < 0, c < 0 (got a={a:.6g}, b={b:.6g}, c={c:.6g})")
    return (0.0, min(1.0, math.sqrt(a * c) / b))


def eps_from_omega(omega: float, p: float) -> float:
    """Small-amplitude scaling parameter eps = (1 - omega^2)^{(p+1)/2}.

    1 - omega^2 is formed as (1 - omega)(1 + omega): the subtraction is then
    exact for omega >= 1/2, keeping the omega <-> eps round trip ulp-tight.
    """
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega = {omega!r} must lie in (0, 1)")
    return ((1.0 - omega) * (1.0 + omega)) ** ((p + 1.0) / 2.0)


def omega_from_eps(eps: float, p: float) -> float:
    """Inverse of :func:`eps_from_omega`: omega = sqrt(1 - eps^{2/(p+1)})."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps = {eps!r} must lie in (0, 1)")
    return math.sqrt(1.0 - eps ** (2.0 / (p + 1.0)))


@dataclass(frozen=True)
class SpeedPoint:
    """A wave speed omega in (0, 1) paired with its scaling parameter eps."""

    omega: float
    eps: float

    @classmethod
    def from_omega(cls, omega: float, p: float) -> "SpeedPoint":
        return cls(omega=omega, eps=eps_from_omega(omega, p))

    @classmethod
    def from_eps(cls, eps: float, p: float) -> "SpeedPoint":
        return cls(omega=omega_from_eps(eps, p), eps=eps)


def pow_signed(u, p: float):
    """Sign-preserving power sign(u) * |u|^p (odd in u for every real p).

    Matches u^p exactly for odd integer p and for odd/odd rationals, and
    avoids NaN on negative arguments otherwise.  The even companion power
    u^{p+1} is obtained as u * pow_signed(u, p).
    """
    if p < 0:
        raise ValueError("pow_signed requires p >= 0")
    u = np.asarray(u)
    out = np.sign(u) * np.abs(u) ** p
    return out if out.ndim else float(out)
