import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conewave import cross_section, hankel, propagator
from conewave.errors import DegenerateInput, InvalidSpan, TruncationTooCoarse
from conewave.propagator import ModeCoefficients, Side, WaveField


def single_mode(shape="chi", center=1.5, width=1.0, scale=1.0, amplitude=1.0):
    modes = cross_section.sphere_spectrum(4, 0.0, 0)
    return propagator.mode_data(modes, 4, 0, shape, center, width, 128, scale, amplitude)


def test_mode_data_places_one_bump(sphere4_modes, chi_data):
    assert chi_data.side is Side.SPECTRAL
    assert chi_data.active_indices() == [0]
    assert chi_data.profiles[0].support == (1.0, 2.0)
    assert len(chi_data.profiles) == len(sphere4_modes)


def test_mode_data_errors(sphere4_modes):
    with pytest.raises(InvalidSpan):
        propagator.mode_data(sphere4_modes, 4, len(sphere4_modes))
    with pytest.raises(InvalidSpan):
        propagator.mode_data(sphere4_modes, 4, 0, "chi", 0.5, 1.0)


def test_solution_vanishes_at_time_zero(chi_data, out_grid):
    assert np.all(propagator.evolve(chi_data, 0.0, out_grid).samples() == 0.0)


def test_sine_is_the_difference_of_half_waves(chi_data, out_grid):
    times = [0.3, 1.7, 5.0]
    sine = propagator.evolve_field(chi_data, out_grid, times, "sine").values
    plus = propagator.evolve_field(chi_data, out_grid, times, "plus").values
    minus = propagator.evolve_field(chi_data, out_grid, times, "minus").values
    assert_allclose(sine, ((plus - minus) / 2j).real, rtol=0, atol=1e-10)
    assert np.max(np.abs(((plus - minus) / 2j).imag)) < 1e-10


def test_half_wave_at_time_zero_is_a_weighted_transform(chi_data, out_grid):
    state = propagator.half_wave(chi_data, 0.0, +1, out_grid)
    nu = chi_data.modes[0].nu
    direct = hankel.hankel_transform(nu, chi_data.profiles[0], out_grid, multiplier=lambda rho: 1.0 / rho)
    assert_allclose(state.profiles[0].samples.real, direct.samples, rtol=1e-10, atol=1e-12)
    assert np.all(state.profiles[1].samples == 0.0)


def test_time_derivative_at_zero_is_the_data(chi_data, out_grid):
    f = propagator.distorted_fourier(chi_data, out_grid).profiles[0]
    errors = []
    for h in (0.1, 0.05):
        field = propagator.evolve_field(chi_data, out_grid, [-h, h], "sine")
        derivative = (field.values[1, 0] - field.values[0, 0]) / (2.0 * h)
        errors.append(hankel.RadialProfile(out_grid, derivative - f.samples).norm())
    assert math.log2(errors[0] / errors[1]) > 1.9


def test_time_trace_oscillates_at_the_data_frequency():
    spec = single_mode("gaussian", 3.0, 0.05)
    grid = hankel.make_log_grid(4.5, 5.5, 64, 4)
    dt = 0.05
    times = dt * np.arange(2000)
    trace = propagator.evolve_field(spec, grid, times, "sine").values[:, 0, grid.size // 2]
    spectrum = np.abs(np.fft.rfft(trace))
    frequencies = 2.0 * math.pi * np.fft.rfftfreq(len(times), dt)
    peak = frequencies[np.argmax(spectrum)]
    assert abs(peak - 3.0) <= 2.0 * math.pi / (len(times) * dt)


def test_energy_is_conserved(chi_data):
    reference = propagator.energy(chi_data, 0.0)
    for t in (0.5, 3.0, 40.0, 1e3):
        assert_allclose(propagator.energy(chi_data, t), reference, rtol=1e-12)


def test_sobolev_zero_is_the_l2_norm(chi_data):
    assert_allclose(propagator.sobolev_norm(chi_data, 0.0), chi_data.norm(), rtol=1e-12)


@pytest.mark.parametrize("s", [-1.0, -0.5, 0.0, 1.0])
def test_sobolev_norm_scaling(s):
    base = propagator.sobolev_norm(single_mode(), s)
    doubled = propagator.sobolev_norm(single_mode(scale=2.0), s)
    assert_allclose(doubled / base, 2.0 ** (s + 4 / 2.0), rtol=1e-10)


def test_negative_sobolev_normalization():
    amplitude = 1.0 / propagator.sobolev_norm(single_mode(), -1.0)
    assert_allclose(propagator.sobolev_norm(single_mode(amplitude=amplitude), -1.0), 1.0, rtol=1e-12)


def test_frequency_pieces_add_up(chi_data):
    pieces = [propagator.frequency_localize(chi_data, M) for M in (1.0, 2.0)]
    total = pieces[0].samples() + pieces[1].samples()
    assert_allclose(total, chi_data.samples(), rtol=0, atol=1e-12)
    assert pieces[0].profiles[0].support == (1.0, 2.0)


def test_decompose_recovers_a_single_mode():
    section = cross_section.CrossSection("sphere", 3)
    modes = section.spectrum(2)
    grid = hankel.make_log_grid(1e-2, 5.0, 32, 3)
    target = 4

    def f(r, point):
        return np.exp(-r * r) * modes[target].eigenfunction(point[None, :])[0]

    coeffs = propagator.decompose(f, modes, grid, section.quadrature(2))
    samples = coeffs.samples()
    assert_allclose(samples[target], np.exp(-grid.nodes ** 2), rtol=0, atol=1e-10)
    assert np.max(np.abs(np.delete(samples, target, axis=0))) < 1e-10
    assert coeffs.side is Side.PHYSICAL
    assert coeffs.truncation_tail < 1e-6


def test_decompose_reports_coarse_truncation():
    section = cross_section.CrossSection("sphere", 3)
    grid = hankel.make_log_grid(1e-2, 5.0, 32, 3)

    def f(r, point):
        return np.exp(-r * r) * point[0] ** 3

    with pytest.raises(TruncationTooCoarse):
        propagator.decompose(f, section.spectrum(1), grid, section.quadrature(3))


def test_radial_data_on_a_circle_uses_the_constant_mode():
    section = cross_section.CrossSection("circle", 2, 0.25, 2.0)
    modes = section.spectrum(2)
    grid = hankel.make_log_grid(1e-2, 5.0, 32, 2)
    coeffs = propagator.decompose(lambda r, theta: np.exp(-r * r), modes, grid, section.quadrature(2))
    lowest = int(np.argmin([m.nu for m in modes]))
    samples = coeffs.samples()
    assert_allclose(samples[lowest], math.sqrt(4.0 * math.pi) * np.exp(-grid.nodes ** 2), rtol=1e-10)
    assert np.max(np.abs(np.delete(samples, lowest, axis=0))) < 1e-10


def test_distorted_fourier_is_an_involution():
    mode = cross_section.sphere_spectrum(4, 0.0, 0)[0]
    # nu = (n-2)/2 fixes the gaussian
    grid = hankel.make_log_grid(1e-6, 12.0, 64, 4)
    profile = hankel.RadialProfile.from_function(grid, lambda r: np.exp(-0.5 * np.asarray(r) ** 2))
    physical = ModeCoefficients((mode,), (profile,), Side.PHYSICAL)
    spectral = propagator.distorted_fourier(physical, grid)
    assert spectral.side is Side.SPECTRAL
    assert_allclose(spectral.profiles[0].samples, profile.samples, rtol=0, atol=1e-8)
    back = propagator.distorted_fourier(spectral, grid)
    assert back.side is Side.PHYSICAL
    assert_allclose(back.profiles[0].samples, profile.samples, rtol=0, atol=1e-6)


def test_spectral_operations_refuse_physical_data(chi_data, out_grid):
    physical = ModeCoefficients(chi_data.modes, chi_data.profiles, Side.PHYSICAL)
    with pytest.raises(DegenerateInput):
        propagator.evolve(physical, 1.0, out_grid)
    with pytest.raises(DegenerateInput):
        propagator.energy(physical, 1.0)
    with pytest.raises(DegenerateInput):
        propagator.evolve_field(chi_data, out_grid, [1.0], "cosine")


def test_wave_field_checks_its_shape(sphere4_modes, out_grid):
    with pytest.raises(DegenerateInput):
        WaveField(np.array([0.0, 1.0]), np.zeros((2, 1, 3)), out_grid, sphere4_modes[:1], 4, 1.0)
    with pytest.raises(DegenerateInput):
        WaveField(np.array([1.0, 0.0]), np.zeros((2, 1, out_grid.size)), out_grid, sphere4_modes[:1], 4, 1.0)


def plane_wave_residual(points_per_decade):
    mode = cross_section.sphere_spectrum(4, 0.0, 0)[0]
    return propagator.verify_plane_wave(mode, 1.0, hankel.make_log_grid(1e-3, 1e2, points_per_decade, 4))


def test_plane_wave_is_an_eigenfunction():
    fine = plane_wave_residual(256)
    assert fine < 1e-4
    assert math.log2(plane_wave_residual(128) / fine) > 1.9


def test_plane_wave_errors():
    mode = cross_section.sphere_spectrum(4, 0.0, 0)[0]
    with pytest.raises(DegenerateInput):
        propagator.verify_plane_wave(mode, 0.0, hankel.make_log_grid(1e-3, 1e2, 64, 4))
    with pytest.raises(InvalidSpan):
        propagator.verify_plane_wave(mode, 1.0, hankel.make_log_grid(1e-2, 1.0, 64, 4))


def test_solution_is_odd_in_time(chi_data, out_grid):
    field = propagator.evolve_field(chi_data, out_grid, [-1.3, 1.3])
    scale = np.max(np.abs(field.values))
    assert scale > 0
    assert_allclose(field.values[0], -field.values[1], rtol=0, atol=1e-12 * scale)


def two_mode_data(sphere4_modes, a, b):
    low = propagator.mode_data(sphere4_modes, 4, 0, "chi", 1.5, 1.0, 128, amplitude=a)
    high = propagator.mode_data(sphere4_modes, 4, 2, "chi", 1.5, 1.0, 128, amplitude=b)
    return low, high


def test_superposition(sphere4_modes, out_grid, rng):
    a, b = rng.uniform(-2.0, 2.0, size=2)
    low, high = two_mode_data(sphere4_modes, 1.0, 1.0)
    times = [0.4, 2.2]
    combined = propagator.evolve_field(low.scaled(a).added(high.scaled(b)), out_grid, times).values
    separate = (
        a * propagator.evolve_field(low, out_grid, times).values[:, 0]
        + b * propagator.evolve_field(high, out_grid, times).values[:, 0]
    )
    total = combined[:, 0] + combined[:, 1]
    assert_allclose(total, separate, rtol=0, atol=1e-12 * np.max(np.abs(separate)))


def test_modes_evolve_independently(sphere4_modes, out_grid):
    low, high = two_mode_data(sphere4_modes, 1.0, 0.5)
    times = [0.0, 1.1, 3.0]
    field = propagator.evolve_field(low.added(high), out_grid, times)
    assert field.modes == (sphere4_modes[0], sphere4_modes[2])
    for slot, single in enumerate((low, high)):
        alone = propagator.evolve_field(single, out_grid, times).values[:, 0]
        assert_allclose(field.values[:, slot], alone, rtol=0, atol=1e-12 * max(np.max(np.abs(alone)), 1e-300))
