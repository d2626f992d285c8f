"""
Spacetime norms of sampled wave fields, the admissibility predicate and slope fits.

All angular norms are L2(Y): ||u(t, r, .)||^2 = sum_{nu,l} |u_{nu,l}(t, r)|^2.
Radial integrals use the grid weights for r^{n-1} dr, time integrals the trapezoid
rule on the field's samples. q = 2 norms over the whole time axis go through
Plancherel in t and never touch the time samples.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, field_validator, model_validator
from scipy.integrate import cumulative_trapezoid, trapezoid

from conewave import settings
from conewave.errors import (
    DegenerateInput,
    TailNotNegligible,
    UnderResolvedTime,
    WeightNotIntegrable,
)
from conewave.propagator import KINDS, ModeCoefficients, Side, WaveField, time_l2_density

logger = logging.getLogger(__name__)

SCALING_RTOL = 1e-12
SCHUR_DEPTHS = (4, 8, 16, 32)

WeightKind = Literal["none", "japanese_bracket", "pure_power"]


class NormSpec(BaseModel):
    """
    Shape of a mixed norm.

    - time_window: None means the whole time axis (Plancherel for q = 2,
      all samples otherwise)
    - symmetric: samples cover [0, T] only and the integral is doubled
    - radial_window: None means the field's whole grid
    """

    q: float = 2.0
    p: float = 2.0
    time_window: Optional[tuple[float, float]] = None
    radial_window: Optional[tuple[float, float]] = None
    symmetric: bool = False
    weight: WeightKind = "none"
    beta: float = 0.0

    @field_validator("q")
    @classmethod
    def check_q(cls, v: float) -> float:
        if not v >= 2:
            raise ValueError("q must lie in [2, inf]")
        return v

    @field_validator("p")
    @classmethod
    def check_p(cls, v: float) -> float:
        if not v >= 1:
            raise ValueError("p must be >= 1")
        return v

    @field_validator("beta")
    @classmethod
    def check_beta(cls, v: float) -> float:
        if v < 0:
            raise ValueError("beta must be >= 0")
        return v

    @model_validator(mode="after")
    def check_windows(self) -> "NormSpec":
        for name in ("time_window", "radial_window"):
            window = getattr(self, name)
            if window is not None and not window[0] < window[1]:
                raise ValueError(f"{name} must be increasing")
        if self.radial_window is not None and self.radial_window[0] <= 0:
            raise ValueError("radial_window must start above 0")
        return self


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    max_residual: float
    points_used: int


@dataclass(frozen=True)
class SchurSums:
    variant: str
    small_exponent: float
    large_exponent: float
    depths: tuple[int, ...]
    partial_sums: tuple[float, ...]
    tail_bound: float

    @property
    def finite(self) -> bool:
        return self.small_exponent > 0 and self.large_exponent > 0


def _radial_slice(field: WaveField, window: Optional[tuple[float, float]]):
    if window is None:
        return slice(0, field.grid.size), field.grid
    lo = max(window[0], field.grid.r_min)
    hi = min(window[1], field.grid.r_max)
    return field.grid.window(lo, hi)


def _check_time_resolution(field: WaveField, times: np.ndarray) -> None:
    if len(times) < 2 or not math.isfinite(field.rho_max):
        return
    step = float(np.max(np.diff(times)))
    limit = 2.0 * math.pi / (settings.NODES_PER_PERIOD * field.rho_max)
    if step > limit * (1 + 1e-9):
        raise UnderResolvedTime(
            f"time step {step:.4g} exceeds {limit:.4g} = 2 pi / (6 rho_max) for rho_max = {field.rho_max:.4g}"
        )


def _time_selection(field: WaveField, window: Optional[tuple[float, float]]) -> np.ndarray:
    if window is None:
        return np.arange(len(field.times))
    lo, hi = window
    idx = np.nonzero((field.times >= lo - 1e-12) & (field.times <= hi + 1e-12))[0]
    if len(idx) < 2:
        raise DegenerateInput(f"fewer than two time samples inside [{lo:.4g}, {hi:.4g}]")
    return idx


def _plancherel_l2(field: WaveField, radial_window) -> float:
    if field.source is None or field.kind not in KINDS:
        raise DegenerateInput("whole-axis L2 in time needs the spectral data the field was evolved from")
    rows, grid = _radial_slice(field, radial_window)
    density = time_l2_density(field.source, grid, field.kind)
    return math.sqrt(float(np.sum(grid.weights * density)))


def radial_lq(field: WaveField, q: float, radial_window=None) -> np.ndarray:
    """int ||u(t, r, .)||^q r^{n-1} dr for every time sample (max over r for q = inf)."""
    rows, grid = _radial_slice(field, radial_window)
    amplitude = np.sqrt(field.angular_l2_squared()[:, rows])
    if math.isinf(q):
        return np.max(amplitude, axis=1) if amplitude.size else np.zeros(len(field.times))
    return amplitude ** q @ grid.weights


def mixed_norm(field: WaveField, spec: NormSpec) -> float:
    q = spec.q
    if not field.modes:
        return 0.0
    if q == 2 and spec.time_window is None and field.source is not None and field.kind in KINDS:
        return _plancherel_l2(field, spec.radial_window)
    idx = _time_selection(field, spec.time_window)
    times = field.times[idx]
    _check_time_resolution(field, times)
    per_time = radial_lq(field, q, spec.radial_window)[idx]
    if math.isinf(q):
        return float(per_time.max()) if per_time.size else 0.0
    if len(times) < 2:
        raise DegenerateInput("a finite-q time integral needs at least two samples")
    total = float(trapezoid(per_time, times))
    if spec.symmetric:
        total *= 2.0
    return total ** (1.0 / q)


def time_tail_estimate(field: WaveField, spec: NormSpec) -> float:
    """
    Relative share of the q-th power lost beyond the sampled window.

    The radial L^q mass over the outer quarter of |t| is fitted by C |t|^s and
    integrated to infinity; a non-integrable fit returns inf.
    """
    q = spec.q
    if math.isinf(q):
        return 0.0
    idx = _time_selection(field, spec.time_window)
    times = field.times[idx]
    per_time = radial_lq(field, q, spec.radial_window)[idx]
    total = float(trapezoid(per_time, times)) * (2.0 if spec.symmetric else 1.0)
    if total == 0.0:
        return 0.0
    reach = float(np.max(np.abs(times)))
    tail = 0.0
    for side in (1.0,) if spec.symmetric else (1.0, -1.0):
        mask = (side * times >= 0.75 * reach) & (per_time > 0)
        if np.count_nonzero(mask) < 3:
            continue
        slope, intercept = np.polyfit(np.log(np.abs(times[mask])), np.log(per_time[mask]), 1)
        if slope >= -1.0:
            return math.inf
        tail += math.exp(intercept) * reach ** (slope + 1.0) / -(slope + 1.0)
    if spec.symmetric:
        tail *= 2.0
    return tail / total


def rhs_restriction_norm(spec_data: ModeCoefficients, p: float) -> float:
    """|| rho^{-1/p} (sum |b_{nu,l}|^2)^{1/2} ||_{L^p(rho^{n-1} d rho)}."""
    if spec_data.side is not Side.SPECTRAL:
        raise DegenerateInput("the restriction norm is taken of spectral data")
    for profile in spec_data.profiles:
        if profile.is_zero:
            continue
        tail = profile.tail_fraction()
        if tail > settings.TAIL_TOL:
            raise TailNotNegligible(f"spectral profile has relative tail {tail:.3g} outside its grid")
    grid = spec_data.grid
    amplitude = np.sqrt(np.sum(np.abs(spec_data.samples()) ** 2, axis=0))
    if math.isinf(p):
        return float(np.max(amplitude))
    return float(np.sum(grid.weights * (grid.nodes ** (-1.0 / p) * amplitude) ** p) ** (1.0 / p))


def local_energy_functional(field: WaveField, R: float) -> float:
    """R^{-1/2} ||u||_{L2(R; L2((0, R] x Y))}; time samples are used only without spectral data."""
    if not R > 0:
        raise DegenerateInput(f"local energy radius must be > 0, got {R}")
    if not field.modes:
        return 0.0
    window = None if R >= field.grid.r_max else (field.grid.r_min, R)
    if field.source is not None and field.kind in KINDS:
        return _plancherel_l2(field, window) / math.sqrt(R)
    spec = NormSpec(q=2.0, radial_window=window)
    return mixed_norm(field, spec) / math.sqrt(R)


def _spatial_weight(r: np.ndarray, beta: float, kind: str) -> np.ndarray:
    if kind == "japanese_bracket":
        return (1.0 + r * r) ** (-beta / 2.0)
    if kind == "pure_power":
        return r ** (-beta)
    return np.ones_like(r)


def _weighted_densities(field: WaveField, beta: float, T: float, kind: str):
    if kind == "pure_power" and beta >= field.n / 2.0:
        raise WeightNotIntegrable(
            f"|x|^(-{beta:g}) is not locally square integrable in dimension {field.n} (need beta < {field.n / 2:g})"
        )
    mask = (field.times >= 0) & (field.times <= T * (1 + 1e-12))
    times = field.times[mask]
    if len(times) < 2:
        raise DegenerateInput(f"fewer than two time samples in [0, {T:.4g}]")
    _check_time_resolution(field, times)
    weight = _spatial_weight(field.grid.nodes, beta, kind) ** 2 * field.grid.weights
    return times, field.angular_l2_squared()[mask] @ weight


def weighted_norm(field: WaveField, beta: float, T: float, weight_kind: str = "japanese_bracket") -> float:
    """|| w_beta(r) u ||_{L2([0, T]; L2)} with w = <r>^{-beta} or r^{-beta}."""
    times, per_time = _weighted_densities(field, beta, T, weight_kind)
    return math.sqrt(float(trapezoid(per_time, times)))


def weighted_norm_series(
    field: WaveField, beta: float, T_values: Sequence[float], weight_kind: str = "japanese_bracket"
) -> np.ndarray:
    """weighted_norm at every T in T_values from one cumulative integral."""
    T_values = np.asarray(T_values, dtype=float)
    times, per_time = _weighted_densities(field, beta, float(T_values.max()), weight_kind)
    running = cumulative_trapezoid(per_time, times, initial=0.0)
    return np.sqrt(np.interp(T_values, times, running))


def _inverse(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def admissible(n: int, q: float, p: float, nu0: float) -> tuple[bool, str]:
    """
    Conditions for the restriction estimate, in order:
    q > 2n/(n-1); (n+1)/q = (n-1)/p'; and q < 2n/(n-2-2 nu0) when nu0 < (n-2)/2.
    """
    if n < 2 or q < 1 or p < 1 or not nu0 > 0:
        return False, f"outside the parameter domain (n={n}, q={q}, p={p}, nu0={nu0})"
    lower = 2.0 * n / (n - 1)
    if not q > lower:
        return False, f"q = {q:g} must exceed 2n/(n-1) = {lower:g}"
    lhs = (n + 1) * _inverse(q)
    rhs = (n - 1) * (1.0 - 1.0 / p)
    if abs(lhs - rhs) > SCALING_RTOL * max(abs(lhs), abs(rhs), 1e-300):
        return False, f"scaling line fails: (n+1)/q = {lhs:.12g} but (n-1)/p' = {rhs:.12g}"
    if nu0 < (n - 2) / 2.0:
        upper = 2.0 * n / (n - 2 - 2.0 * nu0)
        if not q < upper:
            return False, f"nu0 = {nu0:g} < (n-2)/2 requires q < 2n/(n-2-2 nu0) = {upper:g}"
    return True, "admissible"


def dual_exponent(n: int, q: float) -> float:
    """p on the scaling line (n+1)/q = (n-1)/p'."""
    inv_dual = (n + 1) * _inverse(q) / (n - 1)
    if not inv_dual < 1:
        raise DegenerateInput(f"no p >= 1 on the scaling line for n={n}, q={q:g}")
    return 1.0 / (1.0 - inv_dual)


def schur_exponents(n: int, q: float, nu0: float, variant: str = "LRE2") -> tuple[float, float]:
    """(a, b) with the dyadic shell estimate ~ min{(RM)^a, (RM)^{-b}}."""
    small = n / q + nu0 - (n - 2) / 2.0
    if variant == "LRE2":
        large = (n - 1) / 2.0 - n / q
    elif variant == "LRE1":
        large = (3 * n - 4) / 6.0 - (3 * n - 1) / (3.0 * q)
    else:
        raise DegenerateInput(f"unknown envelope variant {variant!r}")
    return small, large


def schur_partial_sums(
    n: int, q: float, nu0: float, variant: str = "LRE2", depths: Sequence[int] = SCHUR_DEPTHS
) -> SchurSums:
    a, b = schur_exponents(n, q, nu0, variant)
    sums = []
    for depth in depths:
        k = np.arange(-depth, depth + 1, dtype=float)
        sums.append(float(np.sum(np.minimum(2.0 ** (k * a), 2.0 ** (-k * b)))))
    deepest = max(depths)
    if a > 0 and b > 0:
        tail = 2.0 ** (-(deepest + 1) * a) / (1.0 - 2.0 ** (-a)) + 2.0 ** (-(deepest + 1) * b) / (1.0 - 2.0 ** (-b))
    else:
        tail = math.inf
    return SchurSums(variant, a, b, tuple(depths), tuple(sums), tail)


def _as_arrays(points: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = data[:, 0], data[:, 1]
    if len(x) < 3:
        raise DegenerateInput(f"a fit needs at least 3 points, got {len(x)}")
    if len(np.unique(x)) != len(x):
        raise DegenerateInput("fit abscissae must be distinct")
    return x, y


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    x, y = _as_arrays(points)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DegenerateInput("log-log fit needs positive coordinates")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return SlopeFit(float(slope), float(intercept), residual, len(x))


def fit_log_linear(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """y ~ slope * ln(x) + intercept; the residual is relative to max |y|."""
    x, y = _as_arrays(points)
    if np.any(x <= 0):
        raise DegenerateInput("log-linear fit needs positive abscissae")
    lx = np.log(x)
    slope, intercept = np.polyfit(lx, y, 1)
    scale = float(np.max(np.abs(y))) or 1.0
    residual = float(np.max(np.abs(y - (slope * lx + intercept)))) / scale
    return SlopeFit(float(slope), float(intercept), residual, len(x))
