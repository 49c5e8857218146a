import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polymer.cosmo import (
    NonUniqueMinimum,
    SolutionBasis,
    WaveFunction,
    build_example_model,
    combine,
    oscillation_measure,
    preclassicality_scan,
    ray_distance,
    select_preclassical,
    select_preclassical_detail,
    solution_basis,
)


def wave(lo, hi, fn, classes=range(4)):
    vals = [fn(n) if n % 4 in classes else np.nan for n in range(lo, hi + 1)]
    return WaveFunction(lo, np.array(vals, dtype=complex), classes=tuple(classes))


@pytest.fixture(scope="module")
def example_basis():
    return solution_basis(build_example_model())


@pytest.fixture(scope="module")
def selection(example_basis):
    return select_preclassical_detail(example_basis)


# --- measure ---------------------------------------------------------------------


def test_constant_has_zero_measure():
    assert oscillation_measure(wave(0, 40, lambda n: 3.0), (10, 40)) == 0.0


def test_alternating_has_measure_four():
    psi = wave(0, 40, lambda n: (-1.0) ** (n // 4))
    assert oscillation_measure(psi, (0, 40)) == pytest.approx(4.0)


def test_zero_wave_measure():
    assert oscillation_measure(wave(0, 20, lambda n: 0.0), (0, 20)) == 0.0


@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_measure_is_scale_invariant(factor):
    psi = wave(0, 40, lambda n: np.cos(0.4 * n) + 0.1 * n)
    assert oscillation_measure(psi * factor, (4, 36)) == pytest.approx(oscillation_measure(psi, (4, 36)), rel=1e-9)


def test_measure_skips_missing_classes():
    psi = wave(0, 40, lambda n: 2.0, classes=(0,))
    assert oscillation_measure(psi, (0, 40)) == 0.0


def test_window_validation():
    psi = wave(0, 40, lambda n: 1.0)
    with pytest.raises(ValueError, match="at least 3"):
        oscillation_measure(psi, (5, 6))
    with pytest.raises(ValueError, match="outside"):
        oscillation_measure(psi, (30, 50))


# --- selection ---------------------------------------------------------------------


def test_selection_is_the_constant(selection):
    psi = selection.wavefunction
    lo, hi = selection.window
    assert selection.measure < 1e-15
    win = psi.restrict(lo, hi).amplitudes()
    assert np.allclose(win[np.arange(lo, hi + 1) % 4 == 0], 1.0, atol=1e-9)
    assert np.abs(win[np.arange(lo, hi + 1) % 4 != 0]).max() < 1e-9


def test_normalization_convention(selection):
    lo, hi = selection.window
    win = selection.wavefunction.restrict(lo, hi).amplitudes()
    assert np.abs(win).max() == pytest.approx(1.0, rel=1e-14)
    last = win[np.flatnonzero(np.abs(win) > 1e-12)[-1]]
    assert last.imag == pytest.approx(0.0, abs=1e-14) and last.real > 0


def test_only_one_flat_direction(selection):
    assert selection.eigenvalues[1] > 1e-3
    assert len(selection.eigenvalues) == 16


def test_independent_of_basis_choice(example_basis, selection):
    rng = np.random.default_rng(7)
    mix = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    mixed = SolutionBasis(
        tuple(combine(example_basis.elements, mix[:, k]) for k in range(16)),
        example_basis.seed_levels,
    )
    other = select_preclassical(mixed)
    assert ray_distance(selection.wavefunction, other) < 1e-8


def test_shifted_window_agrees(example_basis, selection):
    other = select_preclassical(example_basis, window=(140, 190))
    assert ray_distance(selection.wavefunction, other) < 1e-8


def test_coefficient_scaling_invariant(selection):
    scaled = solution_basis(build_example_model().scaled(3.0))
    assert ray_distance(selection.wavefunction, select_preclassical(scaled)) < 1e-8


def test_degenerate_minimum_raises():
    # two exact constants in different classes: every combination is flat
    a = wave(-40, 40, lambda n: 1.0, classes=(0,))
    b = wave(-40, 40, lambda n: 1.0, classes=(1,))
    basis = SolutionBasis((a, b), (25, 40))
    with pytest.raises(NonUniqueMinimum):
        select_preclassical(basis, (20, 40))


def test_window_outside_basis(example_basis):
    with pytest.raises(ValueError):
        select_preclassical(example_basis, (150, 260))


# --- ray distance and scan ------------------------------------------------------------


def test_ray_distance_ignores_phase_and_scale():
    psi = wave(0, 40, lambda n: np.exp(0.3j * n))
    assert ray_distance(psi, psi * (2 - 5j)) < 1e-14
    other = wave(0, 40, lambda n: np.exp(-0.3j * n))
    assert ray_distance(psi, other) > 0.1


def test_scan_on_selected_solution(selection):
    scan = preclassicality_scan(selection.wavefunction)
    assert scan.positive_measure < 1e-15
    assert scan.negative_measure > scan.positive_measure
    assert scan.note == ""


def test_scan_without_negative_side():
    scan = preclassicality_scan(wave(0, 40, lambda n: 1.0))
    assert scan.negative_measure is None
    assert "no data on the negative side" in scan.note
    assert scan.positive_measure == 0.0
