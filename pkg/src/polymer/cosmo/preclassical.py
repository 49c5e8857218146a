"""Oscillation measure and selection of the least oscillating solution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from polymer.cosmo.evolve import LEVEL_STEP, SolutionBasis, WaveFunction

EIG_RTOL = 1e-8


class NonUniqueMinimum(ArithmeticError):
    """The two smallest generalized eigenvalues coincide; the minimizing ray is not unique."""

    def __init__(self, lowest: float, second: float):
        super().__init__(f"bottom eigenvalues {lowest:.6g} and {second:.6g} coincide within {EIG_RTOL:g}")
        self.lowest = lowest
        self.second = second


def _window_pairs(psi_n_min: int, psi_n_max: int, window: tuple[int, int]) -> np.ndarray:
    lo, hi = window
    if hi - lo + 1 < 3:
        raise ValueError("window must contain at least 3 levels")
    if lo < psi_n_min or hi > psi_n_max:
        raise ValueError(f"window [{lo}, {hi}] outside support [{psi_n_min}, {psi_n_max}]")
    return np.arange(lo, hi - LEVEL_STEP + 1)


def _quotient(num: float, den: float) -> float:
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def oscillation_measure(psi: WaveFunction, window: tuple[int, int]) -> float:
    """sum |psi_{n+4} - psi_n|^2 / sum |psi_n|^2 over n, n+4 in the window.

    Both sums run over the same lower levels n.  Levels without an amplitude
    (classes the state does not carry, undetermined levels) are left out.
    """
    lower = _window_pairs(psi.n_min, psi.n_max, window)
    amps = psi.amplitudes(relative=True)
    u = amps[lower - psi.n_min]
    v = amps[lower + LEVEL_STEP - psi.n_min]
    ok = ~(np.isnan(u) | np.isnan(v))
    u, v = u[ok], v[ok]
    return _quotient(float(np.sum(np.abs(v - u) ** 2)), float(np.sum(np.abs(u) ** 2)))


def _columns(basis: SolutionBasis, lo: int, hi: int, window: tuple[int, int]) -> np.ndarray:
    """Basis amplitudes as columns, each scaled to unit norm on the window."""
    cols = []
    for w in basis.elements:
        col = np.nan_to_num(w.restrict(lo, hi).amplitudes(relative=True), nan=0.0)
        norm = np.linalg.norm(col[window[0] - lo: window[1] - lo + 1])
        cols.append(col / norm if norm > 0 else col)
    return np.column_stack(cols)


def default_window(n_max: int) -> tuple[int, int]:
    return (int(math.ceil(0.75 * n_max)), n_max)


@dataclass(frozen=True)
class Selection:
    wavefunction: WaveFunction
    coefficients: np.ndarray
    eigenvalues: np.ndarray
    window: tuple[int, int]

    @property
    def measure(self) -> float:
        return float(self.eigenvalues[0])


def select_preclassical_detail(basis: SolutionBasis, window: tuple[int, int] | None = None) -> Selection:
    lo_all, hi_all = basis.n_min, basis.n_max
    window = default_window(hi_all) if window is None else tuple(window)
    lower = _window_pairs(lo_all, hi_all, window)
    M = _columns(basis, lo_all, hi_all, window)
    D = M[lower - lo_all]
    N = M[lower + LEVEL_STEP - lo_all] - D

    # Split coefficients into x = T z + P w, with P spanning the directions on
    # which the denominator vanishes.  Those directions only enter the
    # numerator, so w is eliminated by least squares (a Schur complement) and
    # the pencil is positive definite in z.
    _, sv, vh = np.linalg.svd(D, full_matrices=True)
    rank = int(np.sum(sv > sv[0] * 1e-12)) if sv.size and sv[0] > 0 else 0
    if rank < 1:
        raise ValueError("all basis elements vanish on the window")
    T = vh[:rank].conj().T / sv[:rank]
    P = vh[rank:].conj().T
    NT = N @ T
    if P.shape[1]:
        NP = N @ P
        elim = -np.linalg.pinv(NP, rcond=1e-12) @ NT
        NT = NT + NP @ elim
    else:
        elim = np.zeros((0, rank))
    A = NT.conj().T @ NT
    B = (D @ T).conj().T @ (D @ T)
    evals, evecs = scipy.linalg.eigh(A, B)
    evals = np.clip(evals, 0.0, None)
    if len(evals) > 1:
        floor = 1e-12 * max(1.0, float(evals[-1]))
        if evals[1] - evals[0] <= EIG_RTOL * abs(evals[1]) + floor:
            raise NonUniqueMinimum(float(evals[0]), float(evals[1]))
    z = evecs[:, 0]
    coef = T @ z + P @ (elim @ z)

    values = M @ coef
    wl, wh = window
    win = values[wl - lo_all: wh - lo_all + 1]
    peak = np.max(np.abs(win))
    nz = np.flatnonzero(np.abs(win) > peak * 1e-12)
    anchor = win[nz[-1]]
    phase = anchor / abs(anchor)
    values = values / (peak * phase)
    coef = coef / (peak * phase)
    classes = tuple(sorted(set().union(*(w.classes for w in basis.elements))))
    psi = WaveFunction(lo_all, values, classes=classes)
    return Selection(psi, coef, evals, window)


def select_preclassical(basis: SolutionBasis, window: tuple[int, int] | None = None) -> WaveFunction:
    """Ray in the span of ``basis`` minimizing the oscillation measure on ``window``.

    Normalized to max |psi| = 1 on the window, with the amplitude at the
    largest nonzero window level real and positive.
    """
    return select_preclassical_detail(basis, window).wavefunction


def ray_distance(u: WaveFunction, v: WaveFunction, window: tuple[int, int] | None = None) -> float:
    """min over phases of || u/|u| - e^{i t} v/|v| || on the common support or a window."""
    lo = max(u.n_min, v.n_min)
    hi = min(u.n_max, v.n_max)
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    x = np.nan_to_num(u.restrict(lo, hi).amplitudes(relative=True), nan=0.0)
    y = np.nan_to_num(v.restrict(lo, hi).amplitudes(relative=True), nan=0.0)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        return 0.0 if nx == ny else math.sqrt(2.0)
    x, y = x / nx, y / ny
    overlap = np.vdot(y, x)
    if abs(overlap) > 0:
        y = y * (overlap / abs(overlap))
    return float(np.linalg.norm(x - y))


@dataclass
class PreclassicalityScan:
    positive_window: tuple | None
    negative_window: tuple | None
    positive_measure: float | None
    negative_measure: float | None
    note: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def preclassicality_scan(
    solution: WaveFunction,
    negative_window: tuple[int, int] | None = None,
    positive_window: tuple[int, int] | None = None,
) -> PreclassicalityScan:
    """Oscillation measure on both sides of n = 0.  Reported only, never judged."""
    if positive_window is None and solution.n_max > 0:
        positive_window = default_window(solution.n_max)
    if negative_window is None and solution.n_min < 0:
        lo, hi = default_window(-solution.n_min)
        negative_window = (-hi, -lo)
    notes = []

    def measure(window, side):
        if window is None or window[1] - window[0] + 1 < LEVEL_STEP + 1:
            notes.append(f"no data on the {side} side")
            return None
        return oscillation_measure(solution, window)

    pos = measure(positive_window, "positive")
    neg = measure(negative_window, "negative")
    return PreclassicalityScan(positive_window, negative_window, pos, neg, "; ".join(notes))
