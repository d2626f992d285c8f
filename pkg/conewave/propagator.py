"""
Separated-variable wave evolution on the cone.

Data f(r, theta) = sum a_{nu,l}(r) Y_{nu,l}(theta) is carried as ModeCoefficients,
either on the physical side (a_{nu,l}(r)) or the spectral side (b_{nu,l} = H_nu a_{nu,l}).
The solution of u_tt + L u = 0, u(0) = 0, u_t(0) = f is

    u(t, r, theta) = sum H_nu[ rho^{-1} sin(t rho) b_{nu,l}(rho) ](r) Y_{nu,l}(theta)

and the half-wave pieces replace sin(t rho) by exp(+-i t rho).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from conewave import settings
from conewave.bessel import hankel_kernel
from conewave.bumps import chi, lp_bump
from conewave.cross_section import SpectralMode, validate_positivity
from conewave.errors import (
    DegenerateInput,
    InvalidDimension,
    InvalidSpan,
    TailNotNegligible,
    TruncationTooCoarse,
)
from conewave.hankel import (
    RadialGrid,
    RadialProfile,
    hankel_transform,
    kernel_cache,
    make_log_grid,
    prepare_source,
    radial_operator,
)

logger = logging.getLogger(__name__)

# spectral data stays above this frequency so rho^{-1} is bounded
RHO_FLOOR = 1e-2
GAUSSIAN_REACH = 8.0

KINDS = ("sine", "plus", "minus")


class Side(str, Enum):
    PHYSICAL = "physical"
    SPECTRAL = "spectral"


@dataclass(frozen=True, eq=False)
class ModeCoefficients:
    modes: tuple[SpectralMode, ...]
    profiles: tuple[RadialProfile, ...]
    side: Side
    truncation_tail: float = 0.0

    def __post_init__(self):
        if len(self.modes) != len(self.profiles):
            raise DegenerateInput(f"{len(self.modes)} modes but {len(self.profiles)} profiles")
        if self.profiles:
            key = self.profiles[0].grid.key
            if any(p.grid.key != key for p in self.profiles):
                raise DegenerateInput("all profiles must share one grid")

    @property
    def grid(self) -> RadialGrid:
        return self.profiles[0].grid

    def active_indices(self) -> list[int]:
        return [i for i, p in enumerate(self.profiles) if not p.is_zero]

    def samples(self) -> np.ndarray:
        return np.stack([p.samples for p in self.profiles])

    def norm(self) -> float:
        return math.sqrt(sum(p.norm() ** 2 for p in self.profiles))

    def map_profiles(self, func: Callable[[RadialProfile], RadialProfile]) -> "ModeCoefficients":
        return replace(self, profiles=tuple(func(p) for p in self.profiles))

    def scaled(self, c: complex) -> "ModeCoefficients":
        return self.map_profiles(lambda p: p.scaled(c))

    def added(self, other: "ModeCoefficients") -> "ModeCoefficients":
        profiles = []
        for a, b in zip(self.profiles, other.profiles):
            sa, sb = a.sampler, b.sampler
            sampler = None if sa is None or sb is None else (lambda r, sa=sa, sb=sb: sa(r) + sb(r))
            support = None
            if a.support is not None and b.support is not None:
                support = (min(a.support[0], b.support[0]), max(a.support[1], b.support[1]))
            profiles.append(RadialProfile(a.grid, a.samples + b.samples, sampler, support))
        return replace(self, profiles=tuple(profiles))


@dataclass(frozen=True, eq=False)
class WaveField:
    """u_{nu,l}(t, r) for the active modes: values[time, mode, node]."""

    times: np.ndarray
    values: np.ndarray
    grid: RadialGrid
    modes: tuple[SpectralMode, ...]
    n: int
    nu0: float
    kind: str = "custom"
    source: Optional[ModeCoefficients] = None
    rho_max: float = math.inf
    provenance: str = ""

    def __post_init__(self):
        if self.values.shape != (len(self.times), len(self.modes), self.grid.size):
            raise DegenerateInput(f"field values of shape {self.values.shape} do not match times/modes/grid")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise DegenerateInput("field times must be strictly increasing")

    def state(self, index: int) -> ModeCoefficients:
        profiles = tuple(RadialProfile(self.grid, self.values[index, k]) for k in range(len(self.modes)))
        return ModeCoefficients(self.modes, profiles, Side.PHYSICAL)

    def angular_l2_squared(self) -> np.ndarray:
        """||u(t, r, .)||^2_{L2(Y)} = sum |u_{nu,l}|^2, shape (times, nodes)."""
        return np.sum(np.abs(self.values) ** 2, axis=1)


def _require_side(coeffs: ModeCoefficients, side: Side) -> None:
    if coeffs.side is not side:
        raise DegenerateInput(f"expected {side.value} coefficients, got {coeffs.side.value}")


def bump_support(shape: str, center: float, width: float) -> tuple[float, float]:
    if shape == "chi":
        return center - width / 2.0, center + width / 2.0
    return center - GAUSSIAN_REACH * width, center + GAUSSIAN_REACH * width


def bump_function(shape: str, center: float, width: float) -> Callable[[np.ndarray], np.ndarray]:
    """chi stretched to [center - width/2, center + width/2], or a gaussian of std `width`."""
    if shape == "chi":
        lo = center - width / 2.0
        return lambda rho: chi(1.0 + (np.asarray(rho) - lo) / width)
    return lambda rho: np.exp(-0.5 * ((np.asarray(rho) - center) / width) ** 2)


def mode_data(
    modes: Sequence[SpectralMode],
    n: int,
    index: int,
    shape: str = "chi",
    center: float = 1.5,
    width: float = 1.0,
    points_per_decade: float = 64,
    scale: float = 1.0,
    amplitude: float = 1.0,
) -> ModeCoefficients:
    """Spectral data amplitude * bump(rho / scale) on modes[index], zero elsewhere."""
    validate_positivity(modes)
    if not 0 <= index < len(modes):
        raise InvalidSpan(f"mode index {index} outside the {len(modes)} available modes")
    lo, hi = bump_support(shape, center, width)
    lo, hi = lo * scale, hi * scale
    if lo < RHO_FLOOR * min(scale, 1.0):
        raise InvalidSpan(f"spectral support [{lo:.4g}, {hi:.4g}] reaches below {RHO_FLOOR * min(scale, 1.0):g}")
    grid = make_log_grid(lo, hi, points_per_decade, n)
    base = bump_function(shape, center, width)

    def profile(rho):
        return amplitude * base(np.asarray(rho) / scale)

    profiles = [RadialProfile.zeros(grid) for _ in modes]
    profiles[index] = RadialProfile.from_function(grid, profile, support=(lo, hi))
    return ModeCoefficients(tuple(modes), tuple(profiles), Side.SPECTRAL)


def counterexample_data(modes: Sequence[SpectralMode], n: int, points_per_decade: float = 64) -> ModeCoefficients:
    """b = chi on the lowest mode, i.e. f = H_{nu0} chi."""
    lowest = int(np.argmin([m.nu for m in modes]))
    return mode_data(modes, n, lowest, "chi", 1.5, 1.0, points_per_decade)


def decompose(
    f_sampler: Callable[[np.ndarray, np.ndarray], np.ndarray],
    modes: Sequence[SpectralMode],
    grid: RadialGrid,
    theta_quadrature: tuple[np.ndarray, np.ndarray],
    tol: float = 1e-6,
) -> ModeCoefficients:
    """
    a_{nu,l}(r) = int_Y f(r, theta) Y_{nu,l}(theta) d sigma by quadrature.

    f_sampler(r, theta) is called once per quadrature node theta with the grid
    nodes r. The reported truncation tail is the relative L2 mass of f missed by
    the mode list.
    """
    validate_positivity(modes)
    points, weights = theta_quadrature
    basis = np.stack([m.eigenfunction(points) for m in modes], axis=1) * weights[:, None]

    def project(r):
        r = np.asarray(r, dtype=float)
        values = np.stack([np.broadcast_to(f_sampler(r, p), r.shape) for p in points], axis=-1)
        return values, values @ basis

    values, coeffs = project(grid.nodes)
    total = float(np.sum(grid.weights * (np.abs(values) ** 2 @ weights)))
    captured = float(np.sum(grid.weights * np.sum(np.abs(coeffs) ** 2, axis=1)))
    tail = math.sqrt(max(total - captured, 0.0) / total) if total > 0 else 0.0
    if tail > tol:
        raise TruncationTooCoarse(f"modes capture all but {tail:.3g} of the data (tolerance {tol:.1g})")
    profiles = tuple(
        RadialProfile(grid, coeffs[:, k], lambda r, k=k: project(r)[1][..., k]) for k in range(len(modes))
    )
    return ModeCoefficients(tuple(modes), profiles, Side.PHYSICAL, tail)


def distorted_fourier(coeffs: ModeCoefficients, out_grid: RadialGrid) -> ModeCoefficients:
    """Mode-wise H_nu; maps physical to spectral and back."""
    profiles = tuple(hankel_transform(m.nu, p, out_grid) for m, p in zip(coeffs.modes, coeffs.profiles))
    side = Side.SPECTRAL if coeffs.side is Side.PHYSICAL else Side.PHYSICAL
    return ModeCoefficients(coeffs.modes, profiles, side, coeffs.truncation_tail)


def _time_multiplier(kind: str, rho: np.ndarray, times: np.ndarray) -> np.ndarray:
    phase = np.multiply.outer(rho, times)
    if kind == "sine":
        return np.sin(phase) / rho[:, None]
    sign = 1.0 if kind == "plus" else -1.0
    return np.exp(1j * sign * phase) / rho[:, None]


def evolve_field(
    spec: ModeCoefficients,
    grid: RadialGrid,
    times: Sequence[float],
    kind: str = "sine",
    oversample: float = 1.0,
    provenance: str = "",
) -> WaveField:
    """
    Sample the evolution of spectral data on `grid` at `times`.

    kind "sine" is u itself; "plus"/"minus" are the half-wave pieces
    H_nu[rho^{-1} exp(+-i t rho) b]. Modes with zero data are dropped.
    """
    _require_side(spec, Side.SPECTRAL)
    if kind not in KINDS:
        raise DegenerateInput(f"unknown evolution kind {kind!r}")
    if grid.n != spec.grid.n:
        raise InvalidDimension(f"grids disagree on dimension ({spec.grid.n} vs {grid.n})")
    nu0 = validate_positivity(spec.modes)
    times = np.asarray(times, dtype=float)
    active = spec.active_indices()
    reach = grid.r_max + (float(np.max(np.abs(times))) if times.size else 0.0)
    dtype = float if kind == "sine" else complex
    values = np.zeros((len(times), len(active), grid.size), dtype=dtype)
    rho_max = 0.0
    for slot, i in enumerate(active):
        mode = spec.modes[i]
        profile = spec.profiles[i]
        rho_max = max(rho_max, profile.significant_span()[1])
        if not times.size:
            continue
        source = prepare_source(profile, reach, oversample=oversample)
        kernel = kernel_cache.get(mode.nu, grid.n, source.nodes, grid.nodes)
        coeff = source.values * source.weights
        values[:, slot, :] = (kernel @ (coeff[:, None] * _time_multiplier(kind, source.nodes, times))).T
    logger.debug("evolved %d modes at %d times on %d nodes", len(active), len(times), grid.size)
    return WaveField(
        times,
        values,
        grid,
        tuple(spec.modes[i] for i in active),
        grid.n,
        nu0,
        kind,
        spec,
        rho_max if active else math.inf,
        provenance,
    )


def _full_state(spec: ModeCoefficients, field: WaveField) -> ModeCoefficients:
    active = spec.active_indices()
    profiles = [RadialProfile.zeros(field.grid) for _ in spec.modes]
    for slot, i in enumerate(active):
        profiles[i] = RadialProfile(field.grid, field.values[0, slot])
    return ModeCoefficients(spec.modes, tuple(profiles), Side.PHYSICAL)


def evolve(spec: ModeCoefficients, t: float, out_grid: RadialGrid) -> ModeCoefficients:
    return _full_state(spec, evolve_field(spec, out_grid, [t], "sine"))


def half_wave(spec: ModeCoefficients, t: float, sign: int, out_grid: RadialGrid) -> ModeCoefficients:
    kind = "plus" if sign > 0 else "minus"
    return _full_state(spec, evolve_field(spec, out_grid, [t], kind))


def time_l2_density(spec: ModeCoefficients, grid: RadialGrid, kind: str = "sine") -> np.ndarray:
    """
    int_R |u(t, r, .)|^2_{L2(Y)} dt at each node of `grid`, by Plancherel in t:
    2 pi int |K(r, rho) b(rho) rho^{n-2}|^2 d rho for half waves, half of it for sine data.
    """
    _require_side(spec, Side.SPECTRAL)
    factor = math.pi if kind == "sine" else 2.0 * math.pi
    n = grid.n
    density = np.zeros(grid.size)
    for i in spec.active_indices():
        source = prepare_source(spec.profiles[i], 2.0 * grid.r_max)
        kernel = kernel_cache.get(spec.modes[i].nu, n, source.nodes, grid.nodes)
        rho = source.nodes
        density += (kernel ** 2) @ (np.abs(source.values) ** 2 * rho ** (n - 3) * source.weights)
    return factor * density


def energy(spec: ModeCoefficients, t: float) -> float:
    """||u_t(t)||^2 + ||u(t)||^2_{H^1} from the cos^2 and sin^2 multipliers."""
    _require_side(spec, Side.SPECTRAL)
    total = 0.0
    for p in spec.profiles:
        rho = p.grid.nodes
        mass = p.grid.weights * np.abs(p.samples) ** 2
        total += float(np.sum(mass * np.cos(t * rho) ** 2) + np.sum(mass * np.sin(t * rho) ** 2))
    return total


def sobolev_norm(spec: ModeCoefficients, s: float) -> float:
    _require_side(spec, Side.SPECTRAL)
    total = 0.0
    for p in spec.profiles:
        if p.is_zero:
            continue
        weighted = p.multiplied(lambda rho: np.asarray(rho, dtype=float) ** s)
        tail = weighted.tail_fraction()
        if tail > settings.TAIL_TOL:
            raise TailNotNegligible(f"rho^{s:g} b has relative tail {tail:.3g} outside the spectral grid")
        total += weighted.norm() ** 2
    return math.sqrt(total)


def frequency_localize(
    spec: ModeCoefficients, M: float, bump: Callable[[np.ndarray], np.ndarray] = lp_bump
) -> ModeCoefficients:
    """Multiply every profile by bump(rho / M); the canonical bump lives on [M/2, 2M]."""
    _require_side(spec, Side.SPECTRAL)

    def localize(p: RadialProfile) -> RadialProfile:
        out = p.multiplied(lambda rho: bump(np.asarray(rho, dtype=float) / M))
        lo, hi = M / 2.0, 2.0 * M
        if p.support is not None:
            lo, hi = max(lo, p.support[0]), min(hi, p.support[1])
        return RadialProfile(out.grid, out.samples, out.sampler, (lo, max(lo, hi)))

    return spec.map_profiles(localize)


def verify_plane_wave(mode: SpectralMode, rho: float, grid: RadialGrid) -> float:
    """
    Finite-difference residual of A_nu F = rho^2 F for F(r) = (r rho)^{-(n-2)/2} J_nu(r rho),
    on the nodes at least two decades inside the grid.
    """
    if not rho > 0:
        raise DegenerateInput(f"plane-wave frequency must be > 0, got {rho}")
    mask = (grid.nodes >= grid.r_min * 100.0) & (grid.nodes <= grid.r_max / 100.0)
    if np.count_nonzero(mask) < 3:
        raise InvalidSpan(f"grid [{grid.r_min:.4g}, {grid.r_max:.4g}] has no interior two decades from its ends")
    n, h = grid.n, grid.log_step
    r = grid.nodes[mask]

    def radial(x):
        return hankel_kernel(mode.nu, x * rho, n)

    centre = radial(r)
    applied = radial_operator(mode.nu, n, h, radial(r * math.exp(-h)), centre, radial(r * math.exp(h)), r)
    expected = rho * rho * centre
    w = grid.weights[mask]
    return math.sqrt(np.sum(w * (applied - expected) ** 2) / np.sum(w * expected ** 2))
