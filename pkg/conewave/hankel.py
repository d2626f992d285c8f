"""
Hankel transform of order nu in cone dimension n on log-radial grids.

    (H_nu f)(rho) = int_0^inf (r rho)^{-(n-2)/2} J_nu(r rho) f(r) r^{n-1} dr

H_nu is its own inverse, an isometry of L2(r^{n-1} dr), and diagonalises

    A_nu f = -f'' - (n-1)/r f' + (nu^2 - (n-2)^2/4) / r^2 f,   H_nu(A_nu f) = rho^2 H_nu f.

Quadrature is direct: before applying the kernel, the source profile is checked for
tail mass outside its grid and resampled on a finer log grid when the kernel would
oscillate faster than NODES_PER_PERIOD nodes per period.
"""

from __future__ import annotations

import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from conewave import settings
from conewave.bessel import hankel_kernel
from conewave.errors import (
    DegenerateInput,
    InvalidDimension,
    InvalidSpan,
    OscillationUnderResolved,
    TailNotNegligible,
)

logger = logging.getLogger(__name__)

MIN_INTERVALS = 16
SIGNIFICANT = 1e-13
# Gregory end corrections (trapezoid in x = ln r), orders 1..6
_GREGORY = (1 / 12, 1 / 24, 19 / 720, 3 / 160, 863 / 60480, 275 / 24192)
_KERNEL_BLOCK = 2_000_000

Sampler = Callable[[np.ndarray], np.ndarray]


def _gregory_weights(count: int, h: float) -> np.ndarray:
    w = np.full(count, h)
    w[0] = w[-1] = h / 2.0
    for k, g in enumerate(_GREGORY, start=1):
        j = np.arange(k + 1)
        pattern = (-1.0) ** j * np.array([math.comb(k, i) for i in j], dtype=float)
        w[count - 1 - j] -= g * h * pattern
        w[j] -= g * h * pattern
    return w


@dataclass(frozen=True, eq=False)
class RadialGrid:
    nodes: np.ndarray
    weights: np.ndarray
    n: int
    log_step: float

    @property
    def r_min(self) -> float:
        return float(self.nodes[0])

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def span(self) -> tuple[float, float]:
        return self.r_min, self.r_max

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def decades(self) -> float:
        return math.log10(self.r_max / self.r_min)

    @property
    def key(self) -> tuple:
        return (self.size, self.r_min, self.r_max, self.n)

    @property
    def plain_weights(self) -> np.ndarray:
        """Weights for the plain measure dr on the same nodes."""
        return self.weights / self.nodes ** (self.n - 1)

    def scaled(self, factor: float) -> "RadialGrid":
        return RadialGrid(self.nodes * factor, self.weights * factor ** self.n, self.n, self.log_step)

    def window(self, lo: float, hi: float) -> tuple[slice, "RadialGrid"]:
        """Sub-grid of the nodes inside [lo, hi] with its own end-corrected weights."""
        i0 = int(np.searchsorted(self.nodes, lo * (1 - 1e-12), side="left"))
        i1 = int(np.searchsorted(self.nodes, hi * (1 + 1e-12), side="right"))
        if i0 == 0 and i1 == self.size:
            return slice(0, self.size), self
        if i1 - i0 < MIN_INTERVALS + 1:
            raise InvalidSpan(f"window [{lo:.4g}, {hi:.4g}] holds only {i1 - i0} grid nodes")
        sub = _log_grid(self.nodes[i0], self.nodes[i1 - 1], i1 - i0, self.n)
        return slice(i0, i1), sub


def _log_grid(r_min: float, r_max: float, count: int, n: int) -> RadialGrid:
    x = np.linspace(math.log(r_min), math.log(r_max), count)
    h = float(x[1] - x[0])
    nodes = np.exp(x)
    nodes[0], nodes[-1] = r_min, r_max
    weights = _gregory_weights(count, h) * np.exp(n * x)
    exact = r_max ** n * -math.expm1(n * math.log(r_min / r_max)) / n
    # put the residual constant moment on the two end nodes
    ends = np.array([r_min ** n, r_max ** n])
    weights[[0, -1]] += (exact - weights.sum()) * ends / ends.sum()
    defect = abs(weights.sum() - exact) / exact
    if not (defect <= 1e-10 and np.all(weights > 0) and np.all(np.isfinite(weights))):
        raise InvalidSpan(f"quadrature self-test failed on [{r_min:.4g}, {r_max:.4g}] (defect {defect:.3g})")
    return RadialGrid(nodes, weights, n, h)


def make_log_grid(r_min: float, r_max: float, points_per_decade: float, n: int) -> RadialGrid:
    if n < 2:
        raise InvalidDimension(f"cone dimension n must be >= 2, got {n}")
    if not (0 < r_min < r_max and math.isfinite(r_max)):
        raise InvalidSpan(f"need 0 < r_min < r_max, got ({r_min}, {r_max})")
    if points_per_decade < 16:
        raise InvalidSpan(f"points_per_decade must be >= 16, got {points_per_decade}")
    decades = math.log10(r_max / r_min)
    intervals = max(math.ceil(decades * points_per_decade - 1e-9), MIN_INTERVALS)
    return _log_grid(r_min, r_max, intervals + 1, n)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    grid: RadialGrid
    samples: np.ndarray
    sampler: Optional[Sampler] = None
    support: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if len(self.samples) != self.grid.size:
            raise DegenerateInput(f"{len(self.samples)} samples for a grid of {self.grid.size} nodes")
        if not np.all(np.isfinite(self.samples)):
            raise DegenerateInput("profile samples must be finite")

    @classmethod
    def from_function(cls, grid: RadialGrid, func: Sampler, support=None) -> "RadialProfile":
        return cls(grid, np.asarray(func(grid.nodes)), func, support)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialProfile":
        return cls(grid, np.zeros(grid.size), lambda r: np.zeros(np.shape(r)), (grid.r_min, grid.r_min))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.samples)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        if self.sampler is not None:
            return np.asarray(self.sampler(points))
        logger.warning("profile has no exact sampler; resampling with a cubic spline in ln r")
        x = np.log(self.grid.nodes)
        xp = np.log(points)
        if np.iscomplexobj(self.samples):
            return CubicSpline(x, self.samples.real)(xp) + 1j * CubicSpline(x, self.samples.imag)(xp)
        return CubicSpline(x, self.samples)(xp)

    def norm(self) -> float:
        return float(math.sqrt(np.sum(self.grid.weights * np.abs(self.samples) ** 2)))

    def inner(self, other: "RadialProfile") -> complex:
        return complex(np.sum(self.grid.weights * self.samples * np.conj(other.samples)))

    def multiplied(self, factor: Callable[[np.ndarray], np.ndarray]) -> "RadialProfile":
        base = self.sampler
        sampler = None if base is None else (lambda r: base(r) * factor(r))
        return RadialProfile(self.grid, self.samples * factor(self.grid.nodes), sampler, self.support)

    def scaled(self, c: complex) -> "RadialProfile":
        return self.multiplied(lambda r: c)

    def significant_span(self) -> tuple[float, float]:
        grid = self.grid
        if self.support is not None:
            return max(self.support[0], grid.r_min), min(self.support[1], grid.r_max)
        mags = np.abs(self.samples)
        idx = np.nonzero(mags > SIGNIFICANT * mags.max())[0]
        i0 = max(int(idx[0]) - 1, 0)
        i1 = min(int(idx[-1]) + 1, grid.size - 1)
        return float(grid.nodes[i0]), float(grid.nodes[i1])

    def tail_fraction(self) -> float:
        """
        Estimated L2 mass outside the grid relative to the profile norm.

        Zero when a compact support inside the grid is known. Otherwise the mass of
        the outermost quarter-decade blocks is extrapolated geometrically; spans too
        short for two blocks per end fall back to the end samples.
        """
        grid = self.grid
        if self.support is not None and self.support[0] >= grid.r_min * (1 - 1e-12) \
                and self.support[1] <= grid.r_max * (1 + 1e-12):
            return 0.0
        mass = grid.weights * np.abs(self.samples) ** 2
        total = float(mass.sum())
        if total == 0.0:
            return 0.0
        if grid.decades < 0.5:
            mags = np.abs(self.samples)
            return float(max(mags[0], mags[-1]) / mags.max())
        per = max(2, int(round(0.25 * (grid.size - 1) / grid.decades)))
        tail = 0.0
        for outer, inner in ((mass[:per], mass[per:2 * per]), (mass[-per:], mass[-2 * per:-per])):
            m1, m2 = float(outer.sum()), float(inner.sum())
            if m1 <= 1e-4 * settings.TAIL_TOL ** 2 * total:
                continue
            if m1 >= m2:
                return math.inf
            q = m1 / m2
            tail += m1 * q / (1.0 - q)
        return math.sqrt(tail / total)


@dataclass(frozen=True, eq=False)
class QuadratureSource:
    """Nodes, weights and values actually fed to the kernel."""

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray


def prepare_source(
    profile: RadialProfile,
    frequency: float,
    tail_tol: float = settings.TAIL_TOL,
    oversample: float = 1.0,
) -> QuadratureSource:
    """
    Check the tail and resolve the kernel oscillation for output frequencies up to
    `frequency` (largest product partner of r in the kernel argument).
    """
    grid = profile.grid
    if profile.is_zero:
        return QuadratureSource(grid.nodes[:0], grid.weights[:0], profile.samples[:0])
    tail = profile.tail_fraction()
    if tail > tail_tol:
        raise TailNotNegligible(
            f"profile carries relative L2 mass {tail:.3g} outside [{grid.r_min:.4g}, {grid.r_max:.4g}] "
            f"(tolerance {tail_tol:.1g})"
        )
    lo, hi = profile.significant_span()
    if frequency <= 0 or hi <= lo:
        return QuadratureSource(grid.nodes, grid.weights, profile.samples)
    required = 2.0 * math.pi / (settings.NODES_PER_PERIOD * oversample * hi * frequency)
    if grid.log_step <= required:
        return QuadratureSource(grid.nodes, grid.weights, profile.samples)
    count = max(math.ceil(math.log(hi / lo) / required), MIN_INTERVALS) + 1
    if count > settings.MAX_NODES:
        raise OscillationUnderResolved(
            f"resolving the kernel on [{lo:.4g}, {hi:.4g}] up to frequency {frequency:.4g} needs "
            f"{count} nodes (limit {settings.MAX_NODES})"
        )
    refined = _log_grid(lo, hi, count, grid.n)
    logger.debug("refined source [%g, %g] from %d to %d nodes", lo, hi, grid.size, count)
    return QuadratureSource(refined.nodes, refined.weights, profile.evaluate(refined.nodes))


def kernel_matrix(nu: float, out_nodes: np.ndarray, src_nodes: np.ndarray, n: int) -> np.ndarray:
    return hankel_kernel(nu, np.multiply.outer(out_nodes, src_nodes), n)


def _nodes_key(nodes: np.ndarray) -> tuple:
    return (len(nodes), float(nodes[0]), float(nodes[len(nodes) // 2]), float(nodes[-1]))


class KernelCache:
    """Bounded, thread-safe memo of kernel matrices."""

    def __init__(self, size: int = settings.KERNEL_CACHE_SIZE):
        self._size = size
        self._entries: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, nu: float, n: int, src_nodes: np.ndarray, out_nodes: np.ndarray) -> np.ndarray:
        key = (float(nu), n, _nodes_key(src_nodes), _nodes_key(out_nodes))
        with self._lock:
            matrix = self._entries.get(key)
            if matrix is not None:
                self._entries.move_to_end(key)
                return matrix
        matrix = kernel_matrix(nu, out_nodes, src_nodes, n)
        with self._lock:
            self._entries[key] = matrix
            self._entries.move_to_end(key)
            while len(self._entries) > self._size:
                self._entries.popitem(last=False)
        return matrix

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()


kernel_cache = KernelCache()


def hankel_apply(
    nu: float, src_nodes: np.ndarray, weighted: np.ndarray, out_nodes: np.ndarray, n: int
) -> np.ndarray:
    """sum_j K(out_i, src_j) weighted_j, in row blocks to bound memory."""
    out_nodes = np.asarray(out_nodes, dtype=float)
    shape = out_nodes.shape
    flat = out_nodes.ravel()
    dtype = np.result_type(weighted.dtype, float)
    result = np.zeros((len(flat),) + weighted.shape[1:], dtype=dtype)
    if len(src_nodes) == 0:
        return result.reshape(shape + weighted.shape[1:])
    block = max(1, _KERNEL_BLOCK // len(src_nodes))
    for start in range(0, len(flat), block):
        rows = flat[start:start + block]
        result[start:start + block] = kernel_matrix(nu, rows, src_nodes, n) @ weighted
    return result.reshape(shape + weighted.shape[1:])


def hankel_transform(
    nu: float,
    profile: RadialProfile,
    out_grid: RadialGrid,
    multiplier: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    oversample: float = 1.0,
) -> RadialProfile:
    """Transform `profile` (optionally times multiplier(r)) onto `out_grid`."""
    if not nu >= 0:
        raise DegenerateInput(f"transform order must be >= 0, got {nu}")
    n = profile.grid.n
    if out_grid.n != n:
        raise InvalidDimension(f"grids disagree on dimension ({n} vs {out_grid.n})")
    source = prepare_source(profile, out_grid.r_max, oversample=oversample)
    values = source.values if multiplier is None else source.values * multiplier(source.nodes)
    weighted = values * source.weights
    samples = hankel_apply(nu, source.nodes, weighted, out_grid.nodes, n)

    def sampler(points: np.ndarray) -> np.ndarray:
        return hankel_apply(nu, source.nodes, weighted, points, n)

    return RadialProfile(out_grid, samples, sampler)


def reciprocal_grid(profile: RadialProfile, points_per_decade: Optional[float] = None) -> RadialGrid:
    """Output grid wide enough to hold the transform of a smooth bump-like profile."""
    grid = profile.grid
    mass = grid.weights * np.abs(profile.samples) ** 2
    total = mass.sum()
    mean = np.sum(mass * grid.nodes) / total
    width = math.sqrt(max(np.sum(mass * (grid.nodes - mean) ** 2) / total, 1e-300))
    lo, hi = profile.significant_span()
    ppd = points_per_decade or max(16.0, (grid.size - 1) / grid.decades)
    return make_log_grid(1e-6 / hi, 24.0 / width, ppd, grid.n)


def verify_plancherel(nu: float, profile: RadialProfile, out_grid: Optional[RadialGrid] = None) -> float:
    norm = profile.norm()
    if norm == 0.0:
        return 0.0
    out_grid = out_grid or reciprocal_grid(profile)
    transformed = hankel_transform(nu, profile, out_grid)
    return abs(transformed.norm() - norm) / norm


def verify_self_adjoint(nu: float, f: RadialProfile, g: RadialProfile) -> float:
    """|<H f, g> - <f, H g>| / (||f|| ||g||), each transform sampled on the other profile's grid."""
    scale = f.norm() * g.norm()
    if scale == 0.0:
        return 0.0
    left = hankel_transform(nu, f, g.grid).inner(g)
    right = f.inner(hankel_transform(nu, g, f.grid))
    return abs(left - right) / scale


def radial_operator(nu: float, n: int, h: float, minus, centre, plus, r) -> np.ndarray:
    """Centred differences of A_nu in x = ln r with step h, given f at r e^{-h}, r, r e^{h}."""
    c = nu * nu - (n - 2) ** 2 / 4.0
    f_x = (plus - minus) / (2.0 * h)
    f_xx = (plus - 2.0 * centre + minus) / (h * h)
    return -(f_xx + (n - 2) * f_x - c * centre) / (r * r)


def apply_radial_operator(nu: float, profile: RadialProfile) -> RadialProfile:
    """A_nu f by centred differences on the log grid; zero on the two end nodes."""
    grid = profile.grid
    h = grid.log_step
    s = profile.samples
    values = np.zeros_like(s)
    values[1:-1] = radial_operator(nu, grid.n, h, s[:-2], s[1:-1], s[2:], grid.nodes[1:-1])
    sampler = None
    if profile.sampler is not None:
        base = profile.sampler

        def sampler(r):
            r = np.asarray(r, dtype=float)
            return radial_operator(nu, grid.n, h, base(r * math.exp(-h)), base(r), base(r * math.exp(h)), r)

    return RadialProfile(grid, values, sampler, profile.support)


def verify_diagonalization(nu: float, profile: RadialProfile, out_grid: Optional[RadialGrid] = None) -> float:
    out_grid = out_grid or reciprocal_grid(profile)
    transformed = hankel_transform(nu, profile, out_grid)
    expected = transformed.samples * out_grid.nodes ** 2
    scale = math.sqrt(np.sum(out_grid.weights * np.abs(expected) ** 2))
    if scale == 0.0:
        return 0.0
    applied = hankel_transform(nu, apply_radial_operator(nu, profile), out_grid)
    residual = math.sqrt(np.sum(out_grid.weights * np.abs(applied.samples - expected) ** 2))
    return residual / scale
