"""
Bessel functions J_nu(r) of real order nu >= 0.

Scalar evaluation (`bessel_j`) picks one of three methods:
- power series for r <= max(8, nu/2),
- Hankel large-argument asymptotics for r >= max(30, 2 nu, nu^2), summed to the
  smallest term and used only when that term is below 1e-12,
- Schlafli's integral representation otherwise,

    J_nu(r) = (1/pi) int_0^pi cos(r sin t - nu t) dt - (sin(nu pi)/pi) int_0^inf exp(-r sinh s - nu s) ds.

Array evaluation for transform kernels goes through scipy.special.jv; the two are
cross-checked by the self-test suite.

The envelope and rough-bound constants are frozen from classical bounds times a
safety factor 1.1:
- small regime: |J_nu(r)| <= (r/2)^nu / Gamma(nu+1) <= (e/4)^nu / sqrt(2 pi nu),
- transition: |J_nu(r)| <= 0.675 nu^{-1/3} and |J_nu(r)| <= sqrt(2/pi) (r^2 - nu^2)^{-1/4} for r > nu,
- rough bound: the Poisson integral with int_{-1}^1 (1-s^2)^{nu-1/2} ds <= 1.05 (1 + 1/(nu+1/2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import optimize
from scipy.special import gammaln, jv

from conewave.bumps import cutoff
from conewave.errors import DegenerateInput, NotConverged

SERIES_TOL = 1e-18
SERIES_MAX_TERMS = 500
ASYMPTOTIC_TOL = 1e-12
QUADRATURE_TOL = 1e-13
DEFAULT_DELTA = 0.1
# below this argument the kernel uses the leading small-argument term
SMALL_KERNEL_ARG = 1e-4

ENVELOPE_SMALL_C = 1.1
ENVELOPE_SMALL_RATE = 0.25
ENVELOPE_TRANSITION_C = 1.1
ENVELOPE_OSCILLATORY_C = 1.1
ROUGH_BOUND_C = 1.1

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_EXP_CUTOFF = math.log(1e18)


class Method(str, Enum):
    POWER_SERIES = "power_series"
    SCHLAFLI = "schlafli_quadrature"
    ASYMPTOTIC = "large_arg_asymptotic"


class Regime(str, Enum):
    SMALL = "small"
    TRANSITION = "transition"
    OSCILLATORY = "oscillatory"


@dataclass(frozen=True)
class BesselEval:
    value: float
    method: Method
    est_abs_error: float


@dataclass(frozen=True)
class SchlafliSplit:
    oscillatory: float
    exponential: float
    delta: Optional[float] = None
    pieces: Optional[tuple[float, float, float]] = None

    @property
    def value(self) -> float:
        return self.oscillatory - self.exponential


def _check_domain(nu: float, r: float) -> None:
    if not nu >= 0:
        raise DegenerateInput(f"Bessel order must be >= 0, got {nu}")
    if not r > 0:
        raise DegenerateInput(f"Bessel argument must be > 0, got {r}")


def _panel_gauss(func: Callable[[np.ndarray], np.ndarray], a: float, b: float, panels: int) -> float:
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * func(x)))


def panel_integrate(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    panels: int = 8,
    tol: float = QUADRATURE_TOL,
    max_panels: int = 1 << 16,
) -> tuple[float, float]:
    """Composite 16-point Gauss-Legendre, doubling panels until two passes agree."""
    if b <= a:
        return 0.0, 0.0
    previous = _panel_gauss(func, a, b, panels)
    while panels < max_panels:
        panels *= 2
        current = _panel_gauss(func, a, b, panels)
        change = abs(current - previous)
        if change <= tol * max(1.0, abs(current)):
            return current, change
        previous = current
    raise NotConverged(f"panel quadrature on [{a:.4g}, {b:.4g}] did not settle with {max_panels} panels")


def power_series(nu: float, r: float) -> BesselEval:
    log_prefactor = nu * math.log(r / 2.0) - float(gammaln(nu + 1.0))
    ratio = -(r / 2.0) ** 2
    term = 1.0
    total = 1.0
    largest = 1.0
    for k in range(1, SERIES_MAX_TERMS + 1):
        term *= ratio / (k * (k + nu))
        total += term
        largest = max(largest, abs(term))
        if abs(term) < SERIES_TOL * largest:
            prefactor = math.exp(log_prefactor)
            error = prefactor * largest * np.finfo(float).eps * (k + 1)
            return BesselEval(prefactor * total, Method.POWER_SERIES, error)
    raise NotConverged(f"power series for J_{nu}({r}) did not converge in {SERIES_MAX_TERMS} terms")


def asymptotic(nu: float, r: float) -> BesselEval:
    """Hankel expansion summed up to its smallest term."""
    mu = 4.0 * nu * nu
    omega = r - nu * math.pi / 2.0 - math.pi / 4.0
    p_sum, q_sum = 1.0, 0.0
    term = 1.0
    smallest = 1.0
    for k in range(1, 200):
        next_term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * r)
        if abs(next_term) >= abs(term) and k > 1:
            break
        term = next_term
        sign = (-1.0) ** (k // 2)
        if k % 2:
            q_sum += sign * term
        else:
            p_sum += sign * term
        smallest = abs(term)
        if term == 0.0:
            break
    amp = math.sqrt(2.0 / (math.pi * r))
    return BesselEval(amp * (p_sum * math.cos(omega) - q_sum * math.sin(omega)), Method.ASYMPTOTIC, amp * smallest)


def _oscillatory_integral(nu: float, r: float, weight=None, a: float = 0.0, b: float = math.pi):
    def integrand(theta):
        value = np.cos(r * np.sin(theta) - nu * theta)
        return value if weight is None else value * weight(theta)

    panels = max(8, math.ceil((r + nu) / 2.0))
    value, error = panel_integrate(integrand, a, b, panels)
    return value / math.pi, error / math.pi


def _exponential_integral(nu: float, r: float) -> tuple[float, float]:
    factor = math.sin(nu * math.pi) / math.pi
    if nu == int(nu):
        return 0.0, 0.0
    hi = math.asinh(_EXP_CUTOFF / r) + 1.0
    s_max = optimize.brentq(lambda s: r * math.sinh(s) + nu * s - _EXP_CUTOFF, 0.0, hi)
    value, error = panel_integrate(lambda s: np.exp(-r * np.sinh(s) - nu * s), 0.0, s_max)
    return factor * value, abs(factor) * error


def schlafli_split(nu: float, r: float, delta: Optional[float] = None) -> SchlafliSplit:
    """
    Oscillatory and exponential parts of Schlafli's representation.

    With `delta`, the oscillatory part is also split by the cutoff
    Lambda(t) = smooth_step((2 delta - |t|) / delta):
        piece 1: Lambda over [-2 delta, 2 delta]
        piece 2: [-pi, -pi/2 - delta] and [pi/2 + delta, pi]
        piece 3: (1 - Lambda) over [-pi/2 - delta, -delta] and [delta, pi/2 + delta]
    """
    _check_domain(nu, r)
    if delta is not None and not 0 < delta <= math.pi / 4:
        raise DegenerateInput(f"split parameter delta must lie in (0, pi/4], got {delta}")
    oscillatory, _ = _oscillatory_integral(nu, r)
    exponential, _ = _exponential_integral(nu, r)
    pieces = None
    if delta is not None:
        first, _ = _oscillatory_integral(nu, r, lambda t: cutoff(t, delta), 0.0, 2.0 * delta)
        second, _ = _oscillatory_integral(nu, r, None, math.pi / 2.0 + delta, math.pi)
        third, _ = _oscillatory_integral(nu, r, lambda t: 1.0 - cutoff(t, delta), delta, math.pi / 2.0 + delta)
        pieces = (first, second, third)
    return SchlafliSplit(oscillatory, exponential, delta, pieces)


def schlafli(nu: float, r: float) -> BesselEval:
    oscillatory, osc_error = _oscillatory_integral(nu, r)
    exponential, exp_error = _exponential_integral(nu, r)
    error = osc_error + exp_error + 4.0 * np.finfo(float).eps * max(1.0, abs(oscillatory))
    return BesselEval(oscillatory - exponential, Method.SCHLAFLI, error)


def bessel_j(nu: float, r: float) -> BesselEval:
    _check_domain(nu, r)
    if r <= max(8.0, nu / 2.0):
        return power_series(nu, r)
    if r >= max(30.0, 2.0 * nu, nu * nu):
        result = asymptotic(nu, r)
        if result.est_abs_error <= ASYMPTOTIC_TOL:
            return result
    return schlafli(nu, r)


def bessel_j_array(nu: float, r) -> np.ndarray:
    return jv(nu, np.asarray(r, dtype=float))


def small_arg_expansion(nu: float, r: float) -> tuple[float, float]:
    """Leading term r^nu / (2^nu Gamma(nu+1)) and a bound on the remainder, for r <= 1."""
    _check_domain(nu, r)
    if r > 1.0:
        raise DegenerateInput(f"small-argument expansion needs r <= 1, got {r}")
    leading = math.exp(nu * math.log(r / 2.0) - float(gammaln(nu + 1.0)))
    log_bound = (
        -nu * math.log(2.0)
        + (nu + 1.0) * math.log(r)
        - math.log(nu + 1.0)
        - float(gammaln(nu + 0.5))
        - 0.5 * math.log(math.pi)
    )
    return leading, math.exp(log_bound)


def hankel_kernel(nu: float, x, n: int) -> np.ndarray:
    """(x)^{-(n-2)/2} J_nu(x), with the leading small-argument term below SMALL_KERNEL_ARG."""
    x = np.asarray(x, dtype=float)
    power = -(n - 2) / 2.0
    out = np.empty_like(x)
    small = x < SMALL_KERNEL_ARG
    large = ~small
    out[large] = x[large] ** power * jv(nu, x[large])
    if np.any(small):
        xs = x[small]
        out[small] = np.exp((nu + power) * np.log(xs) - nu * math.log(2.0) - float(gammaln(nu + 1.0)))
    return out


def regime_envelope(nu: float, r: float) -> tuple[float, Regime]:
    if nu < 8:
        raise DegenerateInput(f"regime envelope assumes nu >= 8, got {nu}")
    if not r > 0:
        raise DegenerateInput(f"Bessel argument must be > 0, got {r}")
    if r <= nu / 2.0:
        return ENVELOPE_SMALL_C * math.exp(-ENVELOPE_SMALL_RATE * (nu + r)), Regime.SMALL
    if r < 2.0 * nu:
        scale = nu ** (-1.0 / 3.0)
        bound = ENVELOPE_TRANSITION_C * scale * (scale * abs(r - nu) + 1.0) ** (-0.25)
        return bound, Regime.TRANSITION
    c = ENVELOPE_OSCILLATORY_C
    return c / math.sqrt(r) + c / r, Regime.OSCILLATORY


def rough_bound(nu: float, r: float) -> float:
    log_bound = nu * math.log(r / 2.0) - float(gammaln(nu + 0.5)) - 0.5 * math.log(math.pi)
    return ROUGH_BOUND_C * math.exp(log_bound) * (1.0 + 1.0 / (nu + 0.5))


def rough_bound_check(nu: float, r: float) -> bool:
    return abs(bessel_j(nu, r).value) <= rough_bound(nu, r)


def localized_l2_mass(nu: float, R: float) -> float:
    """int_R^{2R} |J_nu(r)|^2 dr."""
    value, _ = panel_integrate(lambda x: jv(nu, x) ** 2, R, 2.0 * R, max(8, math.ceil(R / 2.0)), tol=1e-12)
    return value
