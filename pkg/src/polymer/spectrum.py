"""Discrete spectrum of the area operator.

Areas are in Planck units (l_Pl = 1).  An edge of spin j crossing a surface
contributes ``8 pi gamma sqrt(j (j + 1))``; spins are stored as ``twice_j``
so that half-integers stay exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SpinLabel",
    "AreaValue",
    "SpectrumTable",
    "CrowdingReport",
    "area_contribution",
    "area_eigenvalue",
    "enumerate_spectrum",
    "gap_statistics",
    "crowding_check",
    "min_nonzero_area",
    "default_max_twice_j",
    "spin_area",
]

EIGHT_PI = 8.0 * math.pi


@dataclass(frozen=True, order=True)
class SpinLabel:
    """Half-integer spin ``j`` held as the integer ``2j``."""

    twice_j: int

    def __post_init__(self):
        if isinstance(self.twice_j, bool) or not isinstance(self.twice_j, (int, np.integer)):
            raise TypeError(f"twice_j must be an integer, got {self.twice_j!r}")
        if self.twice_j < 0:
            raise ValueError(f"twice_j must be non-negative, got {self.twice_j}")
        object.__setattr__(self, "twice_j", int(self.twice_j))

    @classmethod
    def from_j(cls, j) -> "SpinLabel":
        twice = Fraction(j) * 2
        if twice.denominator != 1:
            raise ValueError(f"{j} is not a half-integer")
        return cls(int(twice))

    @property
    def j(self) -> Fraction:
        return Fraction(self.twice_j, 2)

    def __str__(self):
        return str(self.j)


@dataclass(frozen=True)
class AreaValue:
    """An area in l_Pl^2 together with the Barbero-Immirzi parameter it was computed at."""

    value: float
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.value < 0:
            raise ValueError(f"area must be non-negative, got {self.value}")

    def at_gamma(self, gamma: float) -> "AreaValue":
        return AreaValue(self.value * gamma / self.gamma, gamma)

    def __float__(self):
        return float(self.value)


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma > 0 or not math.isfinite(gamma):
        raise ValueError(f"gamma must be a positive finite number, got {gamma}")
    return gamma


def area_contribution(spin: SpinLabel | int) -> float:
    """sqrt(j(j+1)) for one edge, evaluated as sqrt(k(k+2))/2 with k = 2j."""
    k = spin.twice_j if isinstance(spin, SpinLabel) else int(spin)
    if k < 1:
        raise ValueError("the trivial representation (j = 0) carries no area")
    return math.sqrt(k * (k + 2)) / 2.0


def spin_area(twice_j: int, gamma: float) -> float:
    """Area quantum of a single edge (or puncture) of spin ``twice_j / 2``."""
    return EIGHT_PI * gamma * area_contribution(twice_j)


def area_eigenvalue(spins: Iterable[SpinLabel | int], gamma: float) -> AreaValue:
    gamma = _check_gamma(gamma)
    total = math.fsum(area_contribution(s) for s in spins)
    return AreaValue(EIGHT_PI * gamma * total, gamma)


def min_nonzero_area(gamma: float) -> AreaValue:
    """Smallest non-zero eigenvalue: a single j = 1/2 edge."""
    gamma = _check_gamma(gamma)
    return AreaValue(EIGHT_PI * gamma * math.sqrt(3.0) / 2.0, gamma)


def default_max_twice_j(cutoff: float, gamma: float) -> int:
    # conservative: every spin contributes at least sqrt(3)/2 per unit of 2j
    return max(1, math.ceil(2.0 * cutoff / (EIGHT_PI * gamma * math.sqrt(3.0) / 2.0)))


@dataclass(frozen=True)
class SpectrumTable:
    values: np.ndarray
    gamma: float
    cutoff: float
    max_twice_j: int
    dedup_tolerance: float
    truncated: bool = False
    merged: int = 0

    def __len__(self):
        return len(self.values)

    @property
    def eigenvalues(self) -> list[AreaValue]:
        return [AreaValue(float(v), self.gamma) for v in self.values]


def enumerate_spectrum(
    cutoff: float,
    gamma: float = 1.0,
    max_twice_j: int | None = None,
    tol: float = 1e-9,
) -> SpectrumTable:
    """All distinct area eigenvalues strictly below ``cutoff``.

    Depth-first generation over non-increasing spin sequences, pruned by the
    remaining area budget.  Values closer than ``tol`` are merged into the
    smallest member of their cluster.
    """
    gamma = _check_gamma(gamma)
    if not cutoff > 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")

    lossless = default_max_twice_j(cutoff, gamma)
    if max_twice_j is None:
        max_twice_j = lossless
    truncated = spin_area(max_twice_j + 1, gamma) < cutoff
    if truncated:
        warnings.warn(
            f"max_twice_j={max_twice_j} drops spins whose single-edge area is below "
            f"the cutoff; eigenvalues may be missing (lossless cap: {lossless})",
            stacklevel=2,
        )

    quanta = [spin_area(k, gamma) for k in range(1, max_twice_j + 1)]
    quanta = [q for q in quanta if q < cutoff]
    raw: list[float] = [0.0]

    # explicit stack: (index of largest allowed spin, accumulated area)
    stack = [(len(quanta) - 1, 0.0)]
    while stack:
        top, acc = stack.pop()
        for i in range(top, -1, -1):
            value = acc + quanta[i]
            if value < cutoff:
                raw.append(value)
                stack.append((i, value))

    raw.sort()
    values = [raw[0]]
    for v in raw[1:]:
        if v - values[-1] > tol:
            values.append(v)
    return SpectrumTable(
        values=np.asarray(values),
        gamma=gamma,
        cutoff=float(cutoff),
        max_twice_j=int(max_twice_j),
        dedup_tolerance=tol,
        truncated=truncated,
        merged=len(raw) - len(values),
    )


def gap_statistics(table: SpectrumTable | Sequence[float]) -> list[tuple[float, float]]:
    values = np.asarray(table.values if isinstance(table, SpectrumTable) else table, dtype=float)
    if len(values) < 2:
        raise ValueError("need at least two eigenvalues to form a gap")
    gaps = np.diff(values)
    return [(float(a), float(g)) for a, g in zip(values[:-1], gaps)]


@dataclass
class CrowdingReport:
    passed: bool
    window: tuple[float, float]
    checked: int
    worst_ratio: float
    worst_at: float | None
    violations: list[tuple[float, float]] = field(default_factory=list)
    note: str = ""


def crowding_check(
    gaps: Sequence[tuple[float, float]],
    gamma: float,
    lo: float = 100.0,
    hi: float = math.inf,
) -> CrowdingReport:
    """Check gap(a_n) <= exp(-sqrt(a_n)) for every a_n in [lo, hi].

    The bound is an asymptotic statement about large eigenvalues; ``lo`` must
    sit above the pre-asymptotic part of the spectrum for the verdict to mean
    anything.
    """
    _check_gamma(gamma)
    note = "bound is asymptotic: the window start must exceed the pre-asymptotic regime"
    checked = 0
    worst_ratio = 0.0
    worst_at = None
    violations = []
    for a, gap in gaps:
        if a < lo or a > hi:
            continue
        checked += 1
        ratio = gap / math.exp(-math.sqrt(a))
        if ratio > worst_ratio:
            worst_ratio, worst_at = ratio, a
        if ratio > 1.0:
            violations.append((a, gap))
    if checked == 0:
        note = "no data in window; vacuous pass. " + note
    return CrowdingReport(
        passed=not violations,
        window=(lo, hi),
        checked=checked,
        worst_ratio=worst_ratio,
        worst_at=worst_at,
        violations=violations,
        note=note,
    )
