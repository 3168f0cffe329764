"""Closed-form mean-square contractivity analysis of the theta methods.

For a problem with constants (L, mu, M, M_tilde) and decay rate
``alpha = 2 mu + L < 0``, the one-step mean-square amplification factors

    beta(theta, dt)  = 1 + (alpha + (1-theta)^2 M dt) dt / (1 - 2 theta mu dt)
    gamma(theta, dt) = beta(theta, dt) + 3 M_tilde dt^2 / (4 (1 - 2 theta mu dt))

bound E|X_n - Y_n|^2 <= |X_0 - Y_0|^2 exp(rate * t_n) with
rate = ln(factor)/dt.  The admissible stepsize regions keeping the factor
below one are

    Maruyama:  theta < 1: (0, |alpha| / ((1-theta)^2 M)),  theta = 1: all dt > 0
    Milstein:  (0, 4 |alpha| / (4 (1-theta)^2 M + 3 M_tilde))
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .integrators import Scheme

_MAX_EXACT_DENOMINATOR = 10 ** 6


class DomainError(ValueError):
    """Inputs outside the domain of a closed-form expression."""


def _denominator(constants, theta, dt):
    d = 1.0 - 2.0 * theta * constants.mu * dt
    if d <= 0.0:
        raise DomainError(
            f"1 - 2*theta*mu*dt = {d:g} is not positive; the implicit "
            "bound does not apply at this stepsize")
    return d


def beta_maruyama(constants, theta, dt) -> float:
    """One-step mean-square amplification factor of theta-Maruyama."""
    _check_theta_dt(theta, dt)
    num = constants.alpha + (1.0 - theta) ** 2 * constants.M * dt
    return 1.0 + num * dt / _denominator(constants, theta, dt)


def nu_maruyama(constants, theta, dt) -> float:
    """Exponential mean-square decay rate ln(beta)/dt of theta-Maruyama."""
    b = beta_maruyama(constants, theta, dt)
    if b <= 0.0:
        raise DomainError(
            f"amplification factor {b:g} is not positive; no exponential "
            "rate is defined (not mean-square contractive)")
    return math.log(b) / dt


def _require_m_tilde(constants):
    if constants.M_tilde is None:
        raise DomainError(
            "M_tilde is not available for these constants; the Milstein "
            "analysis requires it (estimate it or supply an override)")
    return constants.M_tilde


def gamma_milstein(constants, theta, dt) -> float:
    """One-step mean-square amplification factor of theta-Milstein."""
    mt = _require_m_tilde(constants)
    b = beta_maruyama(constants, theta, dt)
    return b + 3.0 * mt * dt ** 2 / (4.0 * _denominator(constants, theta, dt))


def eps_milstein(constants, theta, dt) -> float:
    """Exponential mean-square decay rate ln(gamma)/dt of theta-Milstein."""
    g = gamma_milstein(constants, theta, dt)
    if g <= 0.0:
        raise DomainError(
            f"amplification factor {g:g} is not positive; no exponential "
            "rate is defined (not mean-square contractive)")
    return math.log(g) / dt


def amplification(scheme, constants, theta, dt) -> float:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.MARUYAMA:
        return beta_maruyama(constants, theta, dt)
    return gamma_milstein(constants, theta, dt)


def exponent(scheme, constants, theta, dt) -> float:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.MARUYAMA:
        return nu_maruyama(constants, theta, dt)
    return eps_milstein(constants, theta, dt)


def _check_theta_dt(theta, dt):
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if dt <= 0.0:
        raise ValueError("dt must be positive")


def _as_fraction(value):
    # exact rational only when a modest denominator reproduces the float
    if value is None or not math.isfinite(value):
        return None
    frac = Fraction(value).limit_denominator(_MAX_EXACT_DENOMINATOR)
    if float(frac) == value:
        return frac
    return None


@dataclass(frozen=True)
class StepsizeRegion:
    """Open interval (0, sup) of mean-square contractive stepsizes."""

    sup: float
    unconditional: bool = False
    empty: bool = False
    sup_fraction: Fraction | None = None
    note: str = ""

    def contains(self, dt) -> bool:
        return (not self.empty) and 0.0 < dt < self.sup

    def format_sup(self) -> str:
        if self.empty:
            return "0"
        if math.isinf(self.sup):
            return "∞"
        if self.sup_fraction is not None:
            f = self.sup_fraction
            if f.denominator == 1:
                return str(f.numerator)
            return f"{f.numerator}/{f.denominator}"
        return f"{self.sup:.12g}"


def region(scheme, constants, theta) -> StepsizeRegion:
    """Admissible stepsize region of the scheme at implicitness theta.

    Empty when alpha >= 0 (the problem itself is not mean-square
    contractive).  Unbounded for theta-Maruyama at theta = 1 and whenever
    the limiting constant vanishes.
    """
    scheme = Scheme.parse(scheme)
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    alpha = constants.alpha
    if alpha >= 0.0:
        return StepsizeRegion(sup=0.0, empty=True,
                              note="alpha = 2*mu + L is nonnegative; the "
                                   "problem is not mean-square contractive")
    if scheme is Scheme.MARUYAMA:
        denom = (1.0 - theta) ** 2 * constants.M
        if denom == 0.0:
            return StepsizeRegion(sup=math.inf, unconditional=True)
        sup = -alpha / denom
        frac = _region_fraction(scheme, constants, theta)
        return StepsizeRegion(sup=sup, sup_fraction=frac)
    mt = _require_m_tilde(constants)
    denom = 4.0 * (1.0 - theta) ** 2 * constants.M + 3.0 * mt
    if denom == 0.0:
        return StepsizeRegion(sup=math.inf, unconditional=True)
    sup = -4.0 * alpha / denom
    frac = _region_fraction(scheme, constants, theta)
    return StepsizeRegion(sup=sup, sup_fraction=frac)


def _region_fraction(scheme, constants, theta):
    parts = [constants.L, constants.mu, constants.M, theta]
    if scheme is Scheme.MILSTEIN:
        parts.append(constants.M_tilde)
    fracs = [_as_fraction(v) for v in parts]
    if any(f is None for f in fracs):
        return None
    if scheme is Scheme.MILSTEIN:
        L, mu, M, th, mt = fracs
    else:
        L, mu, M, th = fracs
    alpha = 2 * mu + L
    if scheme is Scheme.MARUYAMA:
        denom = (1 - th) ** 2 * M
        return None if denom == 0 else -alpha / denom
    denom = 4 * (1 - th) ** 2 * M + 3 * mt
    return None if denom == 0 else -4 * alpha / denom


def expansion_coefficient(scheme, constants, theta) -> float:
    """Leading coefficient of rate(dt) - alpha as dt -> 0.

    The decay rate admits rate = alpha + c1 * dt + O(dt^2) with
    c1 = 2 alpha mu theta + (1 - theta)^2 M - alpha^2 / 2 for Maruyama,
    plus 3 M_tilde / 4 for Milstein.
    """
    scheme = Scheme.parse(scheme)
    a = constants.alpha
    c1 = 2.0 * a * constants.mu * theta + (1.0 - theta) ** 2 * constants.M \
        - a ** 2 / 2.0
    if scheme is Scheme.MILSTEIN:
        c1 += 0.75 * _require_m_tilde(constants)
    return c1


@dataclass(frozen=True)
class LinearStability:
    stable: bool
    factor: float


def linear_ms_stable(scheme, theta, dt, lam, mu_diff) -> LinearStability:
    """Mean-square stability of the scheme on dX = lam X dt + mu_diff X dW.

    ``lam`` and ``mu_diff`` may be complex.  Returns the one-step
    mean-square amplification factor of the recurrence; stable iff it is
    below one.
    """
    scheme = Scheme.parse(scheme)
    _check_theta_dt(theta, dt)
    lam = complex(lam)
    mu = complex(mu_diff)
    denom = 1.0 - theta * dt * lam
    if denom == 0:
        raise DomainError("1 - theta*dt*lam vanishes; the implicit step "
                          "is singular")
    if scheme is Scheme.MARUYAMA:
        factor = (abs(1.0 + (1.0 - theta) * dt * lam) ** 2
                  + dt * abs(mu) ** 2) / abs(denom) ** 2
        factor = float(factor)
        return LinearStability(stable=factor < 1.0, factor=factor)
    beta = (1.0 + (1.0 - theta) * dt * lam - 0.5 * mu ** 2 * dt) / denom
    bracket = (beta ** 2 + beta * mu ** 2 * dt / denom
               + (mu ** 2 * dt + 0.75 * mu ** 4 * dt ** 2) / denom ** 2)
    factor = float(abs(bracket))
    return LinearStability(stable=factor < 1.0, factor=factor)


@dataclass(frozen=True)
class CompatibilityEntry:
    dt: float
    in_region: bool
    stable: bool
    factor: float


@dataclass(frozen=True)
class CompatibilityReport:
    entries: tuple
    compatible: bool

    def violations(self):
        return [e for e in self.entries if e.in_region and not e.stable]


def compatibility_check(scheme, constants, theta, dt_samples, lam,
                        mu_diff) -> CompatibilityReport:
    """Cross-check the nonlinear region against the linear test equation.

    For each sampled dt, records whether it lies in the nonlinear
    contractivity region and whether the linear surrogate
    (lam, mu_diff) is mean-square stable there.  A dt inside the region
    with an unstable surrogate is a reported violation, not an error.
    """
    scheme = Scheme.parse(scheme)
    reg = region(scheme, constants, theta)
    entries = []
    for dt in dt_samples:
        res = linear_ms_stable(scheme, theta, dt, lam, mu_diff)
        entries.append(CompatibilityEntry(dt=float(dt),
                                          in_region=reg.contains(dt),
                                          stable=res.stable,
                                          factor=res.factor))
    entries = tuple(entries)
    compatible = all(e.stable for e in entries if e.in_region)
    return CompatibilityReport(entries=entries, compatible=compatible)


def _json_float(value):
    if value is None:
        return None
    value = float(value)
    if math.isnan(value):
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


@dataclass(frozen=True)
class ContractivityReport:
    """Closed-form analysis of one (scheme, theta, dt) combination."""

    scheme: str
    theta: float
    dt: float
    constants: object
    beta_or_gamma: float
    exponent: float
    region_sup: float
    region_sup_display: str
    contractive: bool
    unconditional: bool
    note: str = ""
    linear_compatible: bool | None = None

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "theta": self.theta,
            "dt": self.dt,
            "constants": self.constants.to_dict(),
            "beta_or_gamma": _json_float(self.beta_or_gamma),
            "exponent": _json_float(self.exponent),
            "region_sup": _json_float(self.region_sup),
            "region_sup_display": self.region_sup_display,
            "contractive": self.contractive,
            "unconditional": self.unconditional,
            "note": self.note,
            "linear_compatible": self.linear_compatible,
        }


def analyze(scheme, constants, theta, dt, lam=None,
            mu_diff=None) -> ContractivityReport:
    """Evaluate factor, rate and region for one configuration.

    When ``lam`` and ``mu_diff`` are given, also runs the linear
    surrogate compatibility check at this dt.
    """
    scheme = Scheme.parse(scheme)
    factor = amplification(scheme, constants, theta, dt)
    note = ""
    if factor > 0.0:
        rate = math.log(factor) / dt
    else:
        rate = math.nan
        note = "amplification factor is not positive; rate undefined"
    reg = region(scheme, constants, theta)
    linear_ok = None
    if lam is not None and mu_diff is not None:
        linear_ok = linear_ms_stable(scheme, theta, dt, lam, mu_diff).stable
    return ContractivityReport(
        scheme=scheme.value, theta=float(theta), dt=float(dt),
        constants=constants, beta_or_gamma=float(factor),
        exponent=rate, region_sup=reg.sup,
        region_sup_display=reg.format_sup(),
        contractive=bool(0.0 < factor < 1.0),
        unconditional=reg.unconditional, note=note,
        linear_compatible=linear_ok)
