from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from polymer.spectrum import spin_area

GAMMA_0 = math.log(2.0) / (math.sqrt(3.0) * math.pi)

RULES = ("R1", "R2", "R3")


class BudgetExceeded(RuntimeError):
    """Exact enumeration would visit more configurations than allowed."""


@dataclass(frozen=True)
class HorizonEnsemble:
    """Micro-canonical window [a_hor - delta, a_hor + delta] on the horizon area.

    ``J_hor`` and ``Q_hor`` are carried as labels only; the count depends on
    the area alone.
    """

    a_hor: float
    gamma: float
    delta: Optional[float] = None
    J_hor: float = 0.0
    Q_hor: tuple = ()

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not (self.a_hor > 0 and math.isfinite(self.a_hor)):
            raise ValueError(f"a_hor must be positive, got {self.a_hor}")
        if self.delta is None:
            object.__setattr__(self, "delta", default_delta(self.a_hor))
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.a_hor - self.delta > 0:
            raise ValueError("the window must exclude zero area (a_hor - delta > 0)")
        object.__setattr__(self, "Q_hor", tuple(self.Q_hor))

    @property
    def lower(self) -> float:
        return self.a_hor - self.delta

    @property
    def upper(self) -> float:
        return self.a_hor + self.delta

    def contains(self, area: float) -> bool:
        return self.lower <= area <= self.upper

    def scaled(self, factor: float) -> "HorizonEnsemble":
        return HorizonEnsemble(
            self.a_hor * factor, self.gamma * factor, self.delta * factor, self.J_hor, self.Q_hor
        )


def default_delta(a_hor: float) -> float:
    return max(1.0, math.sqrt(a_hor)) / 10.0


@dataclass(frozen=True)
class CountingRule:
    """Per-puncture state multiplicity.

    R1: j = 1/2 only, two states per puncture.
    R2: every spin, two states per puncture.
    R3: every spin, 2j + 1 states per puncture; optionally sum(m) = 0.
    """

    rule_id: str = "R1"
    j_max: Optional[int] = None  # cap on twice_j; None means area-budget cap
    projection_constraint: bool = False

    def __post_init__(self):
        rid = str(self.rule_id).upper()
        if rid not in RULES:
            raise ValueError(f"unknown counting rule {self.rule_id!r}; expected one of {RULES}")
        object.__setattr__(self, "rule_id", rid)
        if self.projection_constraint and rid != "R3":
            raise ValueError("the projection constraint only applies to rule R3")
        if self.j_max is not None and self.j_max < 1:
            raise ValueError("j_max (as twice_j) must be at least 1")

    def multiplicity(self, twice_j: int) -> int:
        return twice_j + 1 if self.rule_id == "R3" else 2

    def spins(self, ensemble: HorizonEnsemble) -> list[int]:
        """twice_j values that can occur in the window, smallest first."""
        if self.rule_id == "R1":
            return [1] if spin_area(1, ensemble.gamma) <= ensemble.upper else []
        out = []
        k = 1
        while spin_area(k, ensemble.gamma) <= ensemble.upper:
            if self.j_max is not None and k > self.j_max:
                break
            out.append(k)
            k += 1
        return out

    @property
    def label(self) -> str:
        s = self.rule_id
        if self.j_max is not None:
            s += f"[2j<={self.j_max}]"
        if self.projection_constraint:
            s += "+proj"
        return s


@dataclass
class CountResult:
    count: int
    rule: CountingRule
    ensemble: HorizonEnsemble
    method: str
    ordered: bool = True
    histogram: Optional[dict] = None  # twice_j -> mean punctures per counted state
    exact: bool = True
    boundary_count: int = 0
    bin_width: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @property
    def entropy(self) -> Optional[float]:
        """ln N, or None when nothing is counted."""
        if self.count <= 0:
            return None
        return math.log(self.count)

    @property
    def digits(self) -> int:
        return decimal_digits(self.count)

    def occupancy_fractions(self) -> Optional[dict]:
        if not self.histogram:
            return None
        total = sum(self.histogram.values())
        return {k: v / total for k, v in self.histogram.items()}


def decimal_digits(n: int) -> int:
    if n == 0:
        return 1
    n = abs(n)
    d = int(n.bit_length() * math.log10(2.0))
    # fix the estimate exactly
    while 10 ** d <= n:
        d += 1
    while d > 1 and 10 ** (d - 1) > n:
        d -= 1
    return d
