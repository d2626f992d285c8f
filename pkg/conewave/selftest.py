"""
Built-in property checks, one suite per numerical module.

`conewave selftest [module]` runs them and writes the usual report. Each check
measures a defect and compares it with a fixed tolerance; a check that raises is
reported as FAIL with the error text.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy.special import jv

from conewave import bessel, cross_section, hankel, norms, propagator
from conewave.errors import ConeWaveError, PositivityViolated
from conewave.models import ResultTable, Verdict

logger = logging.getLogger(__name__)

ENVELOPE_ORDERS = (8, 16, 32, 64)
MASS_ORDERS = (0.5, 1.0, 2.5, 4.0)
MASS_RADII = (8.0, 16.0, 32.0, 64.0, 128.0, 256.0)


def _suite(name: str) -> ResultTable:
    return ResultTable(name=f"selftest_{name}", sweep_key="check", columns=["check", "value", "tolerance"])


def _check(table: ResultTable, name: str, measure: Callable[[], float], tolerance: float) -> None:
    try:
        value = float(measure())
    except ConeWaveError as exc:
        table.rows.append([name, math.nan, tolerance])
        table.verdicts.append(Verdict(tag=name, status="FAIL", detail=exc.detail))
        return
    ok = value <= tolerance
    table.rows.append([name, value, tolerance])
    table.verdicts.append(Verdict(tag=name, fitted=value, predicted=tolerance, status="PASS" if ok else "FAIL"))
    logger.debug("selftest %s: %s = %.3g (tolerance %.1g)", table.name, name, value, tolerance)


def _raises(error: type, func: Callable[[], object]) -> Callable[[], float]:
    def measure() -> float:
        try:
            func()
        except error:
            return 0.0
        return 1.0

    return measure


def cross_section_suite() -> list[ResultTable]:
    table = _suite("cross_section")

    def sphere_values():
        nus = sorted({m.nu for m in cross_section.sphere_spectrum(4, 0.0, 2)})
        return max(abs(a - b) for a, b in zip(nus, [1.0, 2.0, 3.0]))

    def sphere_multiplicities():
        mismatches = 0
        for n in (3, 4, 5):
            degrees = [m.degree for m in cross_section.sphere_spectrum(n, 0.0, 3)]
            expected = [cross_section.harmonic_dimension(n, k) for k in range(4)]
            mismatches += sum(degrees.count(k) != d for k, d in enumerate(expected))
        return mismatches

    def sphere_orthonormal():
        section = cross_section.CrossSection("sphere", 4)
        modes = section.spectrum(3)
        return cross_section.orthonormality_check(modes, section.quadrature(3))

    def circle_values():
        nus = sorted({m.nu for m in cross_section.circle_spectrum(2.0, 0.0, 4, 1)})
        return max(abs(a - b) for a, b in zip(nus, [1.0, math.sqrt(1.25)]))

    def constant_potential():
        samples = np.full(256, 0.25)
        numeric = [m.nu for m in cross_section.circle_variable_potential_spectrum(samples, 2, 3)]
        exact = [m.nu for m in cross_section.circle_spectrum(1.0, 0.25, 2, 3)]
        return max(abs(a - b) for a, b in zip(numeric, exact))

    _check(table, "sphere_n4_spectrum", sphere_values, 1e-12)
    _check(table, "sphere_multiplicities", sphere_multiplicities, 0.0)
    _check(table, "sphere_n4_orthonormality", sphere_orthonormal, 1e-10)
    _check(table, "circle_radius2_spectrum", circle_values, 1e-12)
    _check(table, "constant_potential_eigensolve", constant_potential, 1e-8)
    _check(table, "zero_bottom_rejected",
           _raises(PositivityViolated, lambda: cross_section.circle_spectrum(1.0, 0.0, 2, 0)), 0.0)
    return [table]


def bessel_suite() -> list[ResultTable]:
    table = _suite("bessel")
    radii = (0.5, 5.0, 20.0, 50.0)

    def half_integer():
        errors = []
        for r in radii:
            amp = math.sqrt(2.0 / (math.pi * r))
            errors.append(abs(bessel.bessel_j(0.5, r).value - amp * math.sin(r)))
            errors.append(abs(bessel.bessel_j(1.5, r).value - amp * (math.sin(r) / r - math.cos(r))))
        return max(errors)

    def schlafli_identity():
        errors = [abs(bessel.schlafli(nu, r).value - float(jv(nu, r))) for nu in (0.3, 2.7, 10.5) for r in (5.0, 12.0)]
        return max(errors)

    def integer_exponential():
        return max(abs(bessel.schlafli_split(3.0, r).exponential) for r in (5.0, 12.0))

    sweep = ResultTable(name="selftest_bessel_sweep", sweep_key="nu",
                        columns=["nu", "r", "value", "method", "envelope", "regime"])

    def envelope_violations():
        violations = 0
        for nu in ENVELOPE_ORDERS:
            for r in np.geomspace(0.5, 4.0 * nu, 24):
                result = bessel.bessel_j(float(nu), float(r))
                bound, regime = bessel.regime_envelope(float(nu), float(r))
                sweep.rows.append([float(nu), float(r), result.value, result.method.value, bound, regime.value])
                violations += abs(result.value) > bound
        return violations

    def localized_mass():
        masses = [bessel.localized_l2_mass(nu, R) for nu in MASS_ORDERS for R in MASS_RADII]
        return max(masses) / min(masses)

    _check(table, "half_integer_closed_forms", half_integer, 1e-10)
    _check(table, "schlafli_identity", schlafli_identity, 1e-8)
    _check(table, "integer_order_exponential_part", integer_exponential, 0.0)
    _check(table, "envelope_violations", envelope_violations, 0.0)
    _check(table, "localized_mass_spread", localized_mass, 10.0)
    return [table, sweep]


def _shifted_gaussian(grid: hankel.RadialGrid) -> hankel.RadialProfile:
    return hankel.RadialProfile.from_function(grid, lambda r: np.exp(-0.5 * ((np.asarray(r) - 2.0) / 0.3) ** 2))


def hankel_suite() -> list[ResultTable]:
    table = _suite("hankel")

    def grid_moment():
        grid = hankel.make_log_grid(1e-3, 1e3, 64, 2)
        exact = (1e6 - 1e-6) / 2.0
        return abs(grid.weights.sum() - exact) / exact + abs(grid.size - 385)

    def self_reciprocal():
        source = hankel.make_log_grid(1e-9, 12.0, 64, 2)
        out = hankel.make_log_grid(1e-2, 6.0, 64, 2)
        profile = hankel.RadialProfile.from_function(source, lambda r: np.exp(-0.5 * np.asarray(r) ** 2))
        transformed = hankel.hankel_transform(0.0, profile, out)
        return float(np.max(np.abs(transformed.samples - np.exp(-0.5 * out.nodes ** 2))))

    def plancherel():
        defects = []
        for nu in (0.2, 2.5):
            grid = hankel.make_log_grid(1e-2, 8.0, 128, 3)
            spectral = hankel.make_log_grid(1e-8, 32.0, 128, 3)
            defects.append(hankel.verify_plancherel(nu, _shifted_gaussian(grid), spectral))
        return max(defects)

    def self_adjoint():
        grid = hankel.make_log_grid(1e-2, 8.0, 128, 3)
        other = hankel.RadialProfile.from_function(
            grid, lambda r: np.exp(-0.5 * ((np.asarray(r) - 1.2) / 0.25) ** 2))
        return max(hankel.verify_self_adjoint(nu, _shifted_gaussian(grid), other) for nu in (0.2, 2.5))

    def involution():
        grid = hankel.make_log_grid(1e-2, 8.0, 128, 3)
        spectral = hankel.make_log_grid(1e-8, 32.0, 128, 3)
        profile = _shifted_gaussian(grid)
        back = hankel.hankel_transform(1.0, hankel.hankel_transform(1.0, profile, spectral), grid)
        return float(np.max(np.abs(back.samples - profile.samples)))

    def diagonalization():
        grid = hankel.make_log_grid(1e-3, 1e2, 512, 4)
        profile = hankel.RadialProfile.from_function(
            grid, lambda r: np.exp(-np.log(np.asarray(r) / 1.5) ** 2 / (2 * 0.5 ** 2)))
        return hankel.verify_diagonalization(1.0, profile, hankel.make_log_grid(1e-3, 12.0, 64, 4))

    _check(table, "grid_moment", grid_moment, 1e-10)
    _check(table, "gaussian_self_reciprocity", self_reciprocal, 1e-8)
    _check(table, "plancherel", plancherel, 1e-6)
    _check(table, "self_adjointness", self_adjoint, 1e-6)
    _check(table, "involution", involution, 1e-6)
    _check(table, "diagonalization", diagonalization, 1e-4)
    return [table]


def _single_mode(n: int = 4, center: float = 1.5, width: float = 1.0, shape: str = "chi"):
    modes = cross_section.sphere_spectrum(n, 0.0, 0)
    return propagator.mode_data(modes, n, 0, shape, center, width, 128)


def propagator_suite() -> list[ResultTable]:
    table = _suite("propagator")
    spec = _single_mode()
    out = hankel.make_log_grid(1e-2, 20.0, 64, 4)

    def zero_time():
        return float(np.max(np.abs(propagator.evolve(spec, 0.0, out).samples())))

    def energy_drift():
        reference = propagator.energy(spec, 0.0)
        return max(abs(propagator.energy(spec, t) - reference) / reference for t in (0.5, 3.0, 40.0))

    def derivative_order():
        f = propagator.distorted_fourier(spec, out).profiles[0]
        errors = []
        for h in (0.1, 0.05):
            field = propagator.evolve_field(spec, out, [-h, h], "sine")
            derivative = (field.values[1, 0] - field.values[0, 0]) / (2.0 * h)
            errors.append(hankel.RadialProfile(out, derivative - f.samples).norm())
        return 2.0 - math.log2(errors[0] / errors[1])

    def half_wave_identity():
        times = [0.7, 2.0]
        sine = propagator.evolve_field(spec, out, times, "sine").values
        plus = propagator.evolve_field(spec, out, times, "plus").values
        minus = propagator.evolve_field(spec, out, times, "minus").values
        return float(np.max(np.abs(sine - (plus - minus) / 2j)))

    def plane_wave():
        mode = cross_section.sphere_spectrum(4, 0.0, 0)[0]
        grid = hankel.make_log_grid(1e-3, 1e2, 256, 4)
        return propagator.verify_plane_wave(mode, 1.0, grid)

    _check(table, "zero_at_time_zero", zero_time, 0.0)
    _check(table, "energy_drift", energy_drift, 1e-10)
    _check(table, "time_derivative_order_deficit", derivative_order, 0.1)
    _check(table, "half_wave_identity", half_wave_identity, 1e-10)
    _check(table, "plane_wave_residual", plane_wave, 1e-4)
    return [table]


def norms_suite() -> list[ResultTable]:
    table = _suite("norms")

    def admissibility_examples():
        expected = [
            (norms.admissible(3, 6.0, 1.5, 1.0)[0], True),
            (norms.admissible(4, 8.0, norms.dual_exponent(4, 8.0), 0.5)[0], False),
            (norms.admissible(2, 4.0, 1.5, 1.0)[0], False),
        ]
        return sum(got != want for got, want in expected)

    def power_law_fit():
        x = np.geomspace(1.0, 64.0, 7)
        fit = norms.fit_loglog_slope(list(zip(x, 3.0 * x ** 2)))
        return abs(fit.slope - 2.0) + fit.max_residual

    def schur_finite():
        return 0.0 if norms.schur_partial_sums(4, 4.0, 1.0).finite else 1.0

    def plancherel_in_time():
        spec = _single_mode(4, 3.0, 0.2, "gaussian")
        grid = hankel.make_log_grid(0.5, 4.0, 64, 4)
        times = np.linspace(-120.0, 120.0, 4801)
        field = propagator.evolve_field(spec, grid, times, "plus")
        shortcut = norms.mixed_norm(field, norms.NormSpec(q=2.0))
        sampled = norms.mixed_norm(field, norms.NormSpec(q=2.0, time_window=(-120.0, 120.0)))
        return abs(shortcut - sampled) / shortcut

    _check(table, "admissibility_examples", admissibility_examples, 0.0)
    _check(table, "power_law_fit", power_law_fit, 1e-12)
    _check(table, "schur_sums_finite", schur_finite, 0.0)
    _check(table, "plancherel_in_time", plancherel_in_time, 1e-6)
    return [table]


SUITES: dict[str, Callable[[], list[ResultTable]]] = {
    "cross_section": cross_section_suite,
    "bessel": bessel_suite,
    "hankel": hankel_suite,
    "propagator": propagator_suite,
    "norms": norms_suite,
}


def run_selftest(module: Optional[str] = None) -> list[ResultTable]:
    names = list(SUITES) if module is None else [module]
    tables: list[ResultTable] = []
    for name in names:
        logger.info("selftest suite %s", name)
        tables.extend(SUITES[name]())
    return tables
