import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polymer.spectrum import (
    AreaValue,
    SpinLabel,
    area_contribution,
    area_eigenvalue,
    crowding_check,
    default_max_twice_j,
    enumerate_spectrum,
    gap_statistics,
    min_nonzero_area,
    spin_area,
)

spin_lists = st.lists(st.integers(min_value=1, max_value=12), max_size=8)


def brute_force_values(cutoff, gamma, tol=1e-9):
    """Every multiset of spins below the cutoff, deduplicated independently of the enumerator."""
    kmax = default_max_twice_j(cutoff, gamma)
    quanta = [8 * math.pi * gamma * math.sqrt(k * (k + 2)) / 2 for k in range(1, kmax + 1)]
    values = {0.0}
    for size in range(1, int(cutoff // quanta[0]) + 1):
        for combo in itertools.combinations_with_replacement(quanta, size):
            total = math.fsum(combo)
            if total < cutoff:
                values.add(total)
    ordered = sorted(values)
    merged = [ordered[0]]
    for v in ordered[1:]:
        if v - merged[-1] > tol:
            merged.append(v)
    return np.array(merged)


@pytest.mark.parametrize(
    "twice_j, expected",
    [(1, math.sqrt(3) / 2), (2, math.sqrt(2)), (3, math.sqrt(15) / 2)],
)
def test_single_spin_contribution(twice_j, expected):
    assert area_contribution(SpinLabel(twice_j)) == pytest.approx(expected, rel=1e-15)
    assert area_contribution(twice_j) == pytest.approx(expected, rel=1e-15)


def test_trivial_spin_rejected():
    with pytest.raises(ValueError):
        area_contribution(0)


def test_spin_label_from_half_integer():
    assert SpinLabel.from_j(1.5).twice_j == 3
    assert SpinLabel(3).j == pytest.approx(1.5)


def test_empty_set_has_zero_area():
    assert area_eigenvalue([], 0.1).value == 0.0


def test_single_half_spin_area():
    assert area_eigenvalue([1], 1.0).value == pytest.approx(4 * math.sqrt(3) * math.pi, rel=1e-15)


def test_nonpositive_gamma_rejected():
    with pytest.raises(ValueError):
        area_eigenvalue([1], 0.0)
    with pytest.raises(ValueError):
        min_nonzero_area(-1.0)


def test_min_nonzero_area_at_matching_gamma():
    g0 = math.log(2) / (math.sqrt(3) * math.pi)
    assert min_nonzero_area(g0).value == pytest.approx(4 * math.log(2), rel=1e-14)
    assert min_nonzero_area(1.0).value == pytest.approx(21.765592370810612, rel=1e-14)


def test_area_value_rescales():
    a = area_eigenvalue([1, 2], 0.3)
    assert isinstance(a, AreaValue)
    assert a.at_gamma(0.6).value == pytest.approx(2 * a.value, rel=1e-15)


@given(spin_lists, spin_lists, st.floats(min_value=0.01, max_value=10))
def test_additivity(s1, s2, gamma):
    whole = area_eigenvalue(s1 + s2, gamma).value
    parts = area_eigenvalue(s1, gamma).value + area_eigenvalue(s2, gamma).value
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)


@given(spin_lists, st.floats(min_value=0.01, max_value=10), st.floats(min_value=0.01, max_value=100))
def test_gamma_linearity(spins, gamma, c):
    assert area_eigenvalue(spins, c * gamma).value == pytest.approx(
        c * area_eigenvalue(spins, gamma).value, rel=1e-12, abs=1e-12
    )


def test_spectrum_just_above_lowest():
    cutoff = min_nonzero_area(1.0).value * 1.001
    table = enumerate_spectrum(cutoff, 1.0)
    assert table.values.tolist() == pytest.approx([0.0, 4 * math.sqrt(3) * math.pi])


@pytest.mark.parametrize("gamma", [1.0, 0.5, 0.2])
def test_spectrum_matches_brute_force(gamma):
    cutoff = 100 * gamma
    table = enumerate_spectrum(cutoff, gamma)
    oracle = brute_force_values(cutoff, gamma)
    assert len(table.values) == len(oracle)
    assert np.allclose(table.values, oracle, rtol=0, atol=1e-9)


def test_spectrum_scales_with_gamma():
    a = enumerate_spectrum(120.0, 1.0).values
    b = enumerate_spectrum(240.0, 2.0).values
    assert len(a) == len(b)
    assert np.allclose(b / 2, a, rtol=1e-13, atol=0)


def test_table_invariants():
    table = enumerate_spectrum(150.0, 1.0)
    assert table.values[0] == 0.0
    assert table.values[1] == pytest.approx(min_nonzero_area(1.0).value, rel=1e-15)
    assert np.all(np.diff(table.values) > 0)
    assert table.max_twice_j == default_max_twice_j(150.0, 1.0)


def test_degenerate_sums_are_merged():
    # sqrt(48)/2 = 4 * sqrt(3)/2: one j=3 edge and four j=1/2 edges give the same area
    a = spin_area(6, 1.0)
    b = 4 * spin_area(1, 1.0)
    assert a == pytest.approx(b, rel=1e-15)
    table = enumerate_spectrum(a + 1.0, 1.0)
    assert np.sum(np.abs(table.values - a) < 1e-6) == 1
    assert table.merged >= 1


def test_lossy_truncation_warns():
    with pytest.warns(UserWarning):
        enumerate_spectrum(200.0, 1.0, max_twice_j=2)


def test_gap_statistics_two_entries():
    assert gap_statistics([0.0, 3.0]) == [(0.0, 3.0)]
    with pytest.raises(ValueError):
        gap_statistics([1.0])


def test_gaps_positive_and_first_gap_isolated():
    table = enumerate_spectrum(200.0, 1.0)
    gaps = gap_statistics(table)
    assert all(g > 0 for _, g in gaps)
    assert gaps[0] == (0.0, pytest.approx(min_nonzero_area(1.0).value))


def test_gap_envelope_decreases():
    gaps = np.array(gap_statistics(enumerate_spectrum(300.0, 1.0)))
    blocks = [gaps[(gaps[:, 0] >= lo) & (gaps[:, 0] < lo + 50), 1].max() for lo in (50, 100, 150, 200, 250)]
    assert all(b <= a for a, b in zip(blocks, blocks[1:]))


def test_crowding_fails_on_constant_gap():
    report = crowding_check([(100.0, 1.0)], 1.0)
    assert not report.passed
    assert report.worst_at == 100.0
    assert report.worst_ratio == pytest.approx(math.exp(10))


def test_crowding_empty_window_is_vacuous():
    report = crowding_check([(10.0, 1.0), (20.0, 1.0)], 1.0, lo=500.0)
    assert report.passed
    assert report.checked == 0
    assert "no data in window" in report.note


def test_crowding_passes_tiny_gaps():
    report = crowding_check([(100.0, 1e-6), (200.0, 1e-9)], 1.0)
    assert report.passed and report.checked == 2
