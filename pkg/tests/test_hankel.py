import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conewave import hankel, settings
from conewave.errors import (
    DegenerateInput,
    InvalidDimension,
    InvalidSpan,
    OscillationUnderResolved,
    TailNotNegligible,
)


def gaussian(r):
    return np.exp(-0.5 * np.asarray(r) ** 2)


def shifted_gaussian(r):
    return np.exp(-0.5 * ((np.asarray(r) - 2.0) / 0.3) ** 2)


def test_grid_size_and_moment():
    grid = hankel.make_log_grid(1e-3, 1e3, 64, 2)
    assert grid.size == 385
    assert_allclose(grid.weights.sum(), (1e6 - 1e-6) / 2.0, rtol=1e-10)
    assert grid.nodes[0] == 1e-3 and grid.nodes[-1] == 1e3
    assert np.all(grid.weights > 0)


def test_grid_integrates_a_gaussian():
    grid = hankel.make_log_grid(1e-9, 12.0, 64, 2)
    assert_allclose(np.sum(grid.weights * gaussian(grid.nodes)), 1.0, rtol=1e-9)


@pytest.mark.parametrize("args, error", [
    ((1.0, 1.0, 64, 3), InvalidSpan),
    ((0.0, 1.0, 64, 3), InvalidSpan),
    ((1e-2, 1.0, 8, 3), InvalidSpan),
    ((1e-2, 1.0, 64, 1), InvalidDimension),
])
def test_grid_validation(args, error):
    with pytest.raises(error):
        hankel.make_log_grid(*args)


def test_window_and_scaling():
    grid = hankel.make_log_grid(1e-2, 1e2, 64, 3)
    rows, sub = grid.window(0.1, 1.0)
    assert_allclose(sub.nodes, grid.nodes[rows])
    assert sub.r_min >= 0.1 * (1 - 1e-12) and sub.r_max <= 1.0 * (1 + 1e-12)
    with pytest.raises(InvalidSpan):
        grid.window(0.5, 0.55)
    doubled = grid.scaled(2.0)
    assert_allclose(doubled.nodes, 2.0 * grid.nodes)
    assert_allclose(doubled.weights, 8.0 * grid.weights)


@pytest.mark.parametrize("nu, n", [(0.0, 2), (0.5, 3), (1.0, 4)])
def test_gaussian_is_self_reciprocal(nu, n):
    # exp(-r^2/2) is fixed by H_nu when nu = (n-2)/2
    source = hankel.make_log_grid(1e-9, 12.0, 64, n)
    out = hankel.make_log_grid(1e-2, 6.0, 64, n)
    profile = hankel.RadialProfile.from_function(source, gaussian)
    transformed = hankel.hankel_transform(nu, profile, out)
    assert_allclose(transformed.samples, gaussian(out.nodes), rtol=0, atol=1e-8)


@pytest.mark.parametrize("nu", [0.2, 2.5])
def test_plancherel(nu):
    grid = hankel.make_log_grid(1e-2, 8.0, 128, 3)
    spectral = hankel.make_log_grid(1e-8, 32.0, 128, 3)
    profile = hankel.RadialProfile.from_function(grid, shifted_gaussian)
    assert hankel.verify_plancherel(nu, profile, spectral) < 1e-6


def test_involution():
    grid = hankel.make_log_grid(1e-2, 8.0, 128, 3)
    spectral = hankel.make_log_grid(1e-8, 32.0, 128, 3)
    profile = hankel.RadialProfile.from_function(grid, shifted_gaussian)
    back = hankel.hankel_transform(1.0, hankel.hankel_transform(1.0, profile, spectral), grid)
    assert_allclose(back.samples, profile.samples, rtol=0, atol=1e-6)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("nu", [0.2, 0.5, 1.0, 2.5, 7.0])
def test_involution_across_orders_and_dimensions(nu, n):
    grid = hankel.make_log_grid(1e-2, 8.0, 128, n)
    spectral = hankel.make_log_grid(1e-8, 32.0, 128, n)
    profile = hankel.RadialProfile.from_function(grid, shifted_gaussian)
    back = hankel.hankel_transform(nu, hankel.hankel_transform(nu, profile, spectral), grid)
    defect = hankel.RadialProfile(grid, back.samples - profile.samples).norm()
    assert defect / profile.norm() < 1e-6


def narrow_gaussian(r):
    return np.exp(-0.5 * ((np.asarray(r) - 1.2) / 0.25) ** 2)


@pytest.mark.parametrize("nu", [0.2, 2.5])
def test_self_adjoint(nu):
    grid = hankel.make_log_grid(1e-2, 8.0, 128, 3)
    f = hankel.RadialProfile.from_function(grid, shifted_gaussian)
    g = hankel.RadialProfile.from_function(grid, narrow_gaussian)
    assert hankel.verify_self_adjoint(nu, f, g) < 1e-6
    pairing = abs(hankel.hankel_transform(nu, f, grid).inner(g))
    assert pairing > 1e-4 * f.norm() * g.norm()


def test_self_adjoint_of_zero_is_zero():
    grid = hankel.make_log_grid(1e-2, 8.0, 64, 3)
    f = hankel.RadialProfile.from_function(grid, shifted_gaussian)
    assert hankel.verify_self_adjoint(1.0, f, hankel.RadialProfile.zeros(grid)) == 0.0


def test_linearity():
    grid = hankel.make_log_grid(1e-2, 8.0, 128, 3)
    out = hankel.make_log_grid(1e-2, 16.0, 64, 3)
    f = hankel.RadialProfile.from_function(grid, shifted_gaussian)
    g = hankel.RadialProfile.from_function(grid, narrow_gaussian)
    combined = hankel.RadialProfile.from_function(grid, lambda r: 2.0 * shifted_gaussian(r) - 3.0 * narrow_gaussian(r))
    separate = 2.0 * hankel.hankel_transform(1.5, f, out).samples - 3.0 * hankel.hankel_transform(1.5, g, out).samples
    assert_allclose(hankel.hankel_transform(1.5, combined, out).samples, separate, rtol=0, atol=1e-9)


def test_frequency_localized_data_stays_localized():
    # gaussian at rho = 1.5 of width 0.08, sent to physical space and back
    spectral = hankel.make_log_grid(0.5, 4.0, 256, 3)
    bump = hankel.RadialProfile.from_function(spectral, lambda rho: np.exp(-0.5 * ((np.asarray(rho) - 1.5) / 0.08) ** 2))
    physical = hankel.hankel_transform(1.0, bump, hankel.make_log_grid(1e-3, 120.0, 512, 3))
    out = hankel.make_log_grid(1e-2, 8.0, 128, 3)
    back = hankel.hankel_transform(1.0, physical, out)
    outside = (out.nodes < 0.9) | (out.nodes > 2.2)
    leaked = math.sqrt(np.sum(out.weights[outside] * back.samples[outside] ** 2))
    assert leaked / back.norm() < 1e-6
    inside = ~outside
    assert_allclose(back.samples[inside], bump.sampler(out.nodes[inside]), rtol=0, atol=1e-6)


def log_normal(r):
    return np.exp(-np.log(np.asarray(r) / 1.5) ** 2 / (2 * 0.5 ** 2))


def diagonalization_residual(points_per_decade):
    grid = hankel.make_log_grid(1e-3, 1e2, points_per_decade, 4)
    out = hankel.make_log_grid(1e-3, 12.0, 64, 4)
    return hankel.verify_diagonalization(1.0, hankel.RadialProfile.from_function(grid, log_normal), out)


def test_diagonalization():
    assert diagonalization_residual(512) < 1e-4


def test_diagonalization_residual_is_second_order():
    coarse = diagonalization_residual(256)
    fine = diagonalization_residual(512)
    assert math.log2(coarse / fine) > 1.9


def test_zero_profile_transforms_to_zero():
    grid = hankel.make_log_grid(1e-2, 8.0, 64, 3)
    out = hankel.make_log_grid(1e-2, 8.0, 64, 3)
    transformed = hankel.hankel_transform(1.0, hankel.RadialProfile.zeros(grid), out)
    assert transformed.is_zero
    assert hankel.verify_plancherel(1.0, hankel.RadialProfile.zeros(grid), out) == 0.0


def test_truncated_profile_is_refused():
    grid = hankel.make_log_grid(1e-2, 5.0, 64, 2)
    profile = hankel.RadialProfile.from_function(grid, lambda r: np.exp(-np.asarray(r)))
    assert profile.tail_fraction() > settings.TAIL_TOL
    with pytest.raises(TailNotNegligible):
        hankel.hankel_transform(0.0, profile, grid)


def test_known_support_has_no_tail():
    grid = hankel.make_log_grid(1.0, 2.0, 64, 3)
    profile = hankel.RadialProfile.from_function(grid, lambda r: np.ones_like(r), support=(1.0, 2.0))
    assert profile.tail_fraction() == 0.0


def test_unresolvable_oscillation(monkeypatch):
    monkeypatch.setattr(settings, "MAX_NODES", 100)
    grid = hankel.make_log_grid(1e-9, 12.0, 16, 2)
    out = hankel.make_log_grid(1.0, 1e3, 16, 2)
    profile = hankel.RadialProfile.from_function(grid, gaussian)
    with pytest.raises(OscillationUnderResolved):
        hankel.hankel_transform(0.0, profile, out)


def test_transform_argument_checks():
    grid = hankel.make_log_grid(1e-2, 8.0, 64, 3)
    profile = hankel.RadialProfile.from_function(grid, shifted_gaussian)
    with pytest.raises(DegenerateInput):
        hankel.hankel_transform(-1.0, profile, grid)
    with pytest.raises(InvalidDimension):
        hankel.hankel_transform(1.0, profile, hankel.make_log_grid(1e-2, 8.0, 64, 4))
    with pytest.raises(DegenerateInput):
        hankel.RadialProfile(grid, np.zeros(3))


def test_multiplier_is_applied_before_the_kernel():
    grid = hankel.make_log_grid(1e-2, 8.0, 64, 3)
    out = hankel.make_log_grid(1e-1, 4.0, 64, 3)
    profile = hankel.RadialProfile.from_function(grid, shifted_gaussian)
    plain = hankel.hankel_transform(0.5, profile.multiplied(lambda r: 2.0 * np.asarray(r)), out)
    direct = hankel.hankel_transform(0.5, profile, out, multiplier=lambda r: 2.0 * np.asarray(r))
    assert_allclose(direct.samples, plain.samples, rtol=1e-12, atol=1e-14)


def test_kernel_cache_reuses_and_evicts():
    cache = hankel.KernelCache(size=2)
    src = np.geomspace(0.1, 1.0, 5)
    out = np.geomspace(0.5, 2.0, 4)
    first = cache.get(1.0, 3, src, out)
    assert cache.get(1.0, 3, src, out) is first
    assert first.shape == (4, 5)
    cache.get(2.0, 3, src, out)
    cache.get(3.0, 3, src, out)
    assert cache.get(1.0, 3, src, out) is not first


def test_radial_operator_on_a_power():
    # A_nu r^a = (nu^2 - (a + (n-2)/2)^2) r^(a-2)
    nu, n, a = 1.5, 3, 2.0
    grid = hankel.make_log_grid(0.5, 4.0, 256, n)
    profile = hankel.RadialProfile.from_function(grid, lambda r: np.asarray(r) ** a)
    applied = hankel.apply_radial_operator(nu, profile).samples[1:-1]
    r = grid.nodes[1:-1]
    expected = (nu * nu - (a + (n - 2) / 2.0) ** 2) * r ** (a - 2)
    assert_allclose(applied, expected, rtol=1e-3)
