"""
Spectrum of the cross-section operator  Delta_h + V0 + (n-2)^2/4.

Supported cross-sections:
- sphere S^{n-1} with constant V0 (real spherical harmonics),
- circle of radius rho0 with constant V0 (cos/sin Fourier modes),
- unit circle with a sampled periodic V0(theta) (periodic eigensolve).

Eigenfunctions are orthonormal in L2(Y, d sigma) with the geometric measure:
circumference 2 pi rho0 on circles, |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2) on spheres.
On circles an eigenfunction takes angles theta in [0, 2 pi); on spheres it takes
unit vectors of R^n stacked along the last axis.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.special import roots_jacobi

from conewave.errors import InvalidDimension, PositivityViolated, ResolutionTooLow

logger = logging.getLogger(__name__)

# relative gap below which two discrete eigenvalues are one eigenspace
CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class SpectralMode:
    nu: float
    ell: int
    degree: int
    eigenfunction: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False)

    @property
    def nu_squared(self) -> float:
        return self.nu * self.nu


@dataclass(frozen=True)
class CrossSection:
    kind: str
    n: int
    v0: float | np.ndarray = 0.0
    rho0: float = 1.0
    differentiation: str = "spectral"

    def __post_init__(self):
        if self.n < 2:
            raise InvalidDimension(f"cone dimension n must be >= 2, got {self.n}")
        if self.kind not in ("sphere", "circle", "circle_with_potential"):
            raise InvalidDimension(f"unknown cross-section kind {self.kind!r}")
        if self.rho0 <= 0:
            raise InvalidDimension(f"circle radius must be positive, got {self.rho0}")
        if self.kind != "sphere" and self.n != 2:
            logger.warning("circle cross-section with n=%d: Y is one-dimensional only for n=2", self.n)

    def spectrum(self, k_max: int) -> list[SpectralMode]:
        if self.kind == "sphere":
            return sphere_spectrum(self.n, float(self.v0), k_max)
        if self.kind == "circle":
            return circle_spectrum(self.rho0, float(self.v0), self.n, k_max)
        return circle_variable_potential_spectrum(
            np.asarray(self.v0, dtype=float), self.n, k_max, differentiation=self.differentiation
        )

    def quadrature(self, degree: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights exact for products of eigenfunctions up to `degree`."""
        if self.kind == "sphere" and self.n >= 3:
            return sphere_quadrature(self.n, 2 * degree + 2)
        if self.kind == "circle_with_potential":
            count = max(len(np.atleast_1d(self.v0)), 2 * degree + 2)
        else:
            count = 2 * degree + 2
        return circle_quadrature(count, self.rho0 if self.kind == "circle" else 1.0)

    @property
    def measure(self) -> float:
        if self.kind == "sphere" and self.n >= 3:
            return sphere_area(self.n)
        return 2.0 * math.pi * (self.rho0 if self.kind == "circle" else 1.0)


def sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def harmonic_dimension(n: int, k: int) -> int:
    """Dimension of the degree-k spherical harmonics on S^{n-1}."""
    if k == 0:
        return 1
    if n == 2:
        return 2
    lower = math.comb(k + n - 3, n - 1) if k >= 2 else 0
    return math.comb(k + n - 1, n - 1) - lower


def circle_quadrature(count: int, rho0: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    theta = 2.0 * math.pi * np.arange(count) / count
    return theta, np.full(count, 2.0 * math.pi * rho0 / count)


def sphere_quadrature(n: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Product rule on S^{n-1}, exact for polynomials of total degree <= degree.

    x = (t, sqrt(1 - t^2) y) with y on S^{n-2}; d sigma = (1 - t^2)^{(n-3)/2} dt d sigma_{n-2}.
    Gauss-Jacobi in t, trapezoid on the final circle.
    """
    if n == 2:
        theta, weights = circle_quadrature(degree + 1)
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1), weights
    sub_points, sub_weights = sphere_quadrature(n - 1, degree)
    alpha = (n - 3) / 2.0
    t, wt = roots_jacobi(degree // 2 + 1, alpha, alpha)
    scale = np.sqrt(1.0 - t * t)
    points = np.concatenate(
        [np.column_stack([np.full(len(sub_points), ti), si * sub_points]) for ti, si in zip(t, scale)]
    )
    weights = np.concatenate([wi * sub_weights for wi in wt])
    return points, weights


def _check_positive(nu_squared: float, k: int) -> float:
    if not nu_squared > 0:
        raise PositivityViolated(
            f"eigenvalue nu^2 = {nu_squared:.6g} at index {k} is not positive; "
            "Delta_h + V0 + (n-2)^2/4 must be strictly positive"
        )
    return math.sqrt(nu_squared)


def _fourier_mode(k: int, kind: str, rho0: float) -> Callable[[np.ndarray], np.ndarray]:
    if k == 0:
        amp = 1.0 / math.sqrt(2.0 * math.pi * rho0)
        return lambda theta: np.full(np.shape(theta), amp)
    amp = 1.0 / math.sqrt(math.pi * rho0)
    if kind == "cos":
        return lambda theta: amp * np.cos(k * np.asarray(theta))
    return lambda theta: amp * np.sin(k * np.asarray(theta))


def _fourier_modes(nus: Sequence[float], rho0: float) -> list[SpectralMode]:
    modes = []
    for k, nu in enumerate(nus):
        modes.append(SpectralMode(nu, 1, k, _fourier_mode(k, "cos", rho0)))
        if k > 0:
            modes.append(SpectralMode(nu, 2, k, _fourier_mode(k, "sin", rho0)))
    return modes


def _monomial_exponents(n: int, k: int) -> np.ndarray:
    exps = []
    for combo in itertools.combinations_with_replacement(range(n), k):
        e = np.zeros(n, dtype=int)
        for axis in combo:
            e[axis] += 1
        exps.append(e)
    return np.array(exps, dtype=int).reshape(-1, n)


def _monomials(points: np.ndarray, exps: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return np.prod(points[..., None, :] ** exps, axis=-1)


def _harmonic_bases(n: int, k_max: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    Orthonormal real harmonic bases of degree 0..k_max as (exponents, coefficients).

    Degree-k monomials restricted to the sphere span H_k + H_{k-2} + ...; H_k is the
    part orthogonal to all lower harmonics, orthonormalised by SVD under an exact
    quadrature. The overlap with lower harmonics has known rank
    (#monomials - dim H_k), so the complement is cut by count, not by a threshold.
    """
    points, weights = sphere_quadrature(n, 2 * k_max + 2)
    root_w = np.sqrt(weights)
    bases = []
    lower = np.zeros((len(weights), 0))
    for k in range(k_max + 1):
        exps = _monomial_exponents(n, k)
        sampled = root_w[:, None] * _monomials(points, exps)
        dim = harmonic_dimension(n, k)
        rank = len(exps) - dim
        if rank:
            _, s_lower, vt_lower = np.linalg.svd(lower.T @ sampled)
            if s_lower[rank - 1] < 1e-8 * s_lower[0]:
                raise ResolutionTooLow(f"degree-{k} harmonics on S^{n - 1} are not separable at this quadrature")
            kernel = vt_lower[rank:].T
        else:
            kernel = np.eye(len(exps))
        u, s, vt = np.linalg.svd(sampled @ kernel, full_matrices=False)
        if kernel.shape[1] != dim:
            raise ResolutionTooLow(f"found {kernel.shape[1]} degree-{k} harmonics on S^{n - 1}, expected {dim}")
        coeffs = kernel @ vt[:dim].T / s[:dim]
        bases.append((exps, coeffs))
        lower = np.hstack([lower, u[:, :dim]])
    return bases


def _harmonic_evaluator(exps: np.ndarray, coeff: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def evaluate(points: np.ndarray) -> np.ndarray:
        return _monomials(points, exps) @ coeff

    return evaluate


def sphere_spectrum(n: int, v0: float, k_max: int) -> list[SpectralMode]:
    """nu_k^2 = k(k+n-2) + v0 + (n-2)^2/4 with the degree-k harmonics as eigenspace."""
    if n < 2:
        raise InvalidDimension(f"cone dimension n must be >= 2, got {n}")
    if k_max < 0:
        raise InvalidDimension(f"k_max must be >= 0, got {k_max}")
    shift = (n - 2) ** 2 / 4.0
    nus = [_check_positive(k * (k + n - 2) + v0 + shift, k) for k in range(k_max + 1)]
    if n == 2:
        return _fourier_modes(nus, 1.0)
    modes = []
    for k, (exps, coeffs) in enumerate(_harmonic_bases(n, k_max)):
        for ell in range(coeffs.shape[1]):
            modes.append(SpectralMode(nus[k], ell + 1, k, _harmonic_evaluator(exps, coeffs[:, ell])))
    return modes


def circle_spectrum(rho0: float, v0: float, n: int, k_max: int) -> list[SpectralMode]:
    if rho0 <= 0:
        raise InvalidDimension(f"circle radius must be positive, got {rho0}")
    if n < 2:
        raise InvalidDimension(f"cone dimension n must be >= 2, got {n}")
    shift = (n - 2) ** 2 / 4.0
    nus = [_check_positive((k / rho0) ** 2 + v0 + shift, k) for k in range(k_max + 1)]
    return _fourier_modes(nus, rho0)


def _periodic_second_derivative(count: int, method: str) -> np.ndarray:
    h = 2.0 * math.pi / count
    if method == "fd2":
        d2 = -2.0 * np.eye(count) + np.eye(count, k=1) + np.eye(count, k=-1)
        d2[0, -1] = d2[-1, 0] = 1.0
        return d2 / (h * h)
    # Fourier collocation on an even number of points
    j = np.arange(count)
    diff = (j[:, None] - j[None, :]) % count
    with np.errstate(divide="ignore"):
        col = -0.5 * (-1.0) ** diff / np.sin(diff * h / 2.0) ** 2
    col[diff == 0] = -math.pi ** 2 / (3.0 * h * h) - 1.0 / 6.0
    return col


def _trig_interpolant(samples: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    count = len(samples)
    coeffs = np.fft.fft(samples) / count
    freqs = np.fft.fftfreq(count, d=1.0 / count)

    def evaluate(theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phase = np.exp(1j * np.multiply.outer(theta, freqs))
        return np.real(phase @ coeffs)

    return evaluate


def circle_variable_potential_spectrum(
    v0_samples: np.ndarray, n: int, k_max: int, differentiation: str = "spectral"
) -> list[SpectralMode]:
    """
    Lowest k_max+1 eigenspaces of -d^2/dtheta^2 + V0(theta) + (n-2)^2/4 on the unit circle.

    `differentiation` is "spectral" (Fourier collocation, needs an even sample count)
    or "fd2" (second-order centred differences). Eigenvalues within CLUSTER_TOL
    relative distance are merged into one eigenspace.
    """
    v0_samples = np.asarray(v0_samples, dtype=float)
    count = len(v0_samples)
    if count < max(4 * k_max, 4) or (differentiation == "spectral" and count % 2):
        raise ResolutionTooLow(
            f"{count} potential samples cannot resolve {k_max + 1} eigenspaces "
            f"(need an even count >= {max(4 * k_max, 4)})"
        )
    if not np.all(np.isfinite(v0_samples)):
        raise ResolutionTooLow("potential samples must be finite")
    h = 2.0 * math.pi / count
    operator = -_periodic_second_derivative(count, differentiation)
    operator += np.diag(v0_samples + (n - 2) ** 2 / 4.0)
    values, vectors = linalg.eigh(operator)
    if values[0] <= 0:
        raise PositivityViolated(f"smallest eigenvalue {values[0]:.6g} of the cross-section operator is not positive")

    modes: list[SpectralMode] = []
    start = 0
    degree = 0
    while degree <= k_max and start < count:
        stop = start + 1
        while stop < count and values[stop] - values[stop - 1] <= CLUSTER_TOL * max(abs(values[stop]), 1.0):
            stop += 1
        nu = math.sqrt(float(np.mean(values[start:stop])))
        for ell, col in enumerate(range(start, stop)):
            samples = vectors[:, col] / math.sqrt(h)
            modes.append(SpectralMode(nu, ell + 1, degree, _trig_interpolant(samples)))
        start = stop
        degree += 1
    logger.debug("variable-potential eigensolve: %d samples, %d modes", count, len(modes))
    return modes


def validate_positivity(modes: Sequence[SpectralMode]) -> float:
    if not modes:
        raise PositivityViolated("empty mode list")
    nu0 = min(m.nu for m in modes)
    if not nu0 > 0:
        raise PositivityViolated(f"smallest nu = {nu0:.6g} is not positive")
    return nu0


def orthonormality_check(
    modes: Sequence[SpectralMode], quadrature: tuple[np.ndarray, np.ndarray]
) -> float:
    points, weights = quadrature
    values = np.stack([m.eigenfunction(points) for m in modes], axis=-1)
    gram = values.T @ (weights[:, None] * values)
    return float(np.max(np.abs(gram - np.eye(len(modes)))))


def load_potential_samples(path: str) -> np.ndarray:
    """One-column CSV of periodic V0 samples."""
    return np.loadtxt(path, delimiter=",", ndmin=1, dtype=float)


def build_cross_section(
    kind: str,
    n: int,
    v0: float = 0.0,
    rho0: float = 1.0,
    v0_samples: Optional[np.ndarray] = None,
    differentiation: str = "spectral",
) -> CrossSection:
    if kind == "circle_with_potential":
        return CrossSection(kind, n, np.asarray(v0_samples, dtype=float), 1.0, differentiation)
    return CrossSection(kind, n, float(v0), rho0, differentiation)
