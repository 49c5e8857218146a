"""Stepping the difference equation level by level.

Shifts are multiples of 4, so the four residue classes n mod 4 never mix; in
each class the equation is a fourth-order recurrence.  Amplitudes are stored
per class up to a common factor exp(log_scale[class]) so that exponentially
growing solutions can be carried without overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from polymer.cosmo.model import LEVEL_STEP, VACUUM, CoefficientModel, MatterModel

RENORM_THRESHOLD = 1e100
SEED_LEVELS = 4 * LEVEL_STEP  # four levels in each of the four classes
POLICIES = ("skip", "zero")


class SingularModel(ArithmeticError):
    """A step needs to divide by a vanishing coefficient that no declared level explains."""


class DecoupledLevel(ArithmeticError):
    """The amplitude at a declared decoupled level is left free by the equation."""

    def __init__(self, level: int):
        super().__init__(f"amplitude at level {level} is unconstrained (declared decoupled)")
        self.level = level


class RankDeficient(ValueError):
    """Basis elements are linearly dependent."""


@dataclass(frozen=True)
class WaveFunction:
    """Amplitudes psi_n on levels n_min..n_max.

    ``values[i]`` times ``exp(log_scale[(n_min + i) % 4])`` is the amplitude at
    level ``n_min + i``.  NaN marks a level with no amplitude: a class the state
    does not carry, or a decoupled level left undetermined.
    """

    n_min: int
    values: np.ndarray
    log_scale: np.ndarray = field(default_factory=lambda: np.zeros(LEVEL_STEP))
    classes: tuple = (0, 1, 2, 3)
    undetermined: tuple = ()
    policy_log: tuple = ()

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        ls = np.array(self.log_scale, dtype=float)
        ls.setflags(write=False)
        object.__setattr__(self, "log_scale", ls)
        object.__setattr__(self, "classes", tuple(sorted(set(int(r) % LEVEL_STEP for r in self.classes))))
        finite = np.isfinite(vals) | np.isnan(vals)
        if not finite.all():
            raise ValueError("amplitudes must be finite")
        for i in np.flatnonzero(~np.isnan(vals)):
            if (self.n_min + i) % LEVEL_STEP not in self.classes:
                raise ValueError(f"level {self.n_min + i} is outside the declared residue classes")

    @classmethod
    def from_levels(cls, amplitudes: dict, classes: Iterable[int] | None = None) -> "WaveFunction":
        lo, hi = min(amplitudes), max(amplitudes)
        vals = np.full(hi - lo + 1, np.nan, dtype=complex)
        for n, v in amplitudes.items():
            vals[n - lo] = v
        if classes is None:
            classes = {n % LEVEL_STEP for n in amplitudes}
        return cls(lo, vals, classes=tuple(classes))

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.values) - 1

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def defined(self, n: int) -> bool:
        return self.n_min <= n <= self.n_max and not np.isnan(self.values[n - self.n_min])

    def __getitem__(self, n: int) -> complex:
        if not self.n_min <= n <= self.n_max:
            raise IndexError(f"level {n} outside support [{self.n_min}, {self.n_max}]")
        return complex(self.values[n - self.n_min] * math.exp(self.log_scale[n % LEVEL_STEP]))

    def amplitudes(self, relative: bool = False) -> np.ndarray:
        """Amplitudes as one array; ``relative`` divides by the largest class scale."""
        ls = self.log_scale - (self.log_scale.max() if relative else 0.0)
        factors = np.exp(ls[self.levels % LEVEL_STEP])
        return self.values * factors

    def restrict(self, lo: int, hi: int) -> "WaveFunction":
        return replace(self, n_min=lo, values=self.values[lo - self.n_min: hi - self.n_min + 1])

    def __add__(self, other):
        return combine([self, other], [1.0, 1.0])

    def __mul__(self, factor):
        return replace(self, values=self.values * factor)

    __rmul__ = __mul__


def combine(waves: Sequence[WaveFunction], weights: Sequence[complex]) -> WaveFunction:
    """Linear combination on the common support."""
    lo = max(w.n_min for w in waves)
    hi = min(w.n_max for w in waves)
    if lo > hi:
        raise ValueError("wavefunctions have no common support")
    total = np.zeros(hi - lo + 1, dtype=complex)
    mask = np.zeros(hi - lo + 1, dtype=bool)
    classes = set()
    for w, c in zip(waves, weights):
        vals = w.restrict(lo, hi).amplitudes()
        carried = ~np.isnan(vals)
        mask |= carried
        total[carried] += c * vals[carried]
        classes.update(w.classes)
    undetermined = sorted(set().union(*(w.undetermined for w in waves)))
    for lvl in undetermined:
        if lo <= lvl <= hi:
            mask[lvl - lo] = False
    total[~mask] = np.nan
    return WaveFunction(lo, total, classes=tuple(classes), undetermined=tuple(undetermined))


def _term_value(vals, offset, level, coef, undetermined):
    if coef == 0.0:
        return 0.0
    i = level - offset
    if i < 0 or i >= len(vals):
        raise ValueError(f"amplitude at level {level} is needed but outside the state's support")
    v = vals[i]
    if np.isnan(v):
        if level in undetermined:
            raise SingularModel(f"undetermined amplitude at level {level} enters with nonzero coefficient")
        raise ValueError(f"amplitude at level {level} is needed but not supplied")
    return coef * v


def _solve(model, matter, n, vals, offset, undetermined, direction):
    c, d, e, f, g = model.row(n)
    e = e - model.gamma * matter(n)
    if direction == "backward":
        target, pivot = n - 8, g
        terms = ((n + 8, c), (n + 4, d), (n, e), (n - 4, f))
    else:
        target, pivot = n + 8, c
        terms = ((n + 4, d), (n, e), (n - 4, f), (n - 8, g))
    if pivot == 0.0:
        if target in model.decoupled_levels:
            raise DecoupledLevel(target)
        name = "g" if direction == "backward" else "c"
        raise SingularModel(f"{name}_{n} = 0 at an undeclared level")
    acc = 0.0 + 0.0j
    for level, coef in terms:
        acc += _term_value(vals, offset, level, coef, undetermined)
    return -acc / pivot


def step_backward(psi: WaveFunction, model: CoefficientModel, matter: MatterModel = VACUUM, n: int = 0) -> complex:
    """psi_{n-8} from the equation at level n and psi at n+8, n+4, n, n-4."""
    r = n % LEVEL_STEP
    raw = _solve(model, matter, n, psi.values, psi.n_min, set(psi.undetermined), "backward")
    return complex(raw * math.exp(psi.log_scale[r]))


def step_forward(psi: WaveFunction, model: CoefficientModel, matter: MatterModel = VACUUM, n: int = 0) -> complex:
    """psi_{n+8} from the equation at level n and psi at n+4, n, n-4, n-8."""
    r = n % LEVEL_STEP
    raw = _solve(model, matter, n, psi.values, psi.n_min, set(psi.undetermined), "forward")
    return complex(raw * math.exp(psi.log_scale[r]))


def evolve(
    psi_seed: WaveFunction,
    model: CoefficientModel,
    matter: MatterModel = VACUUM,
    from_n: int | None = None,
    to_n: int | None = None,
    direction: str = "backward",
    policy: str = "skip",
) -> WaveFunction:
    """Evolve from 16 seed levels at ``from_n`` to ``to_n``.

    Backward evolution needs the seed on [from_n - 15, from_n], forward on
    [from_n, from_n + 15].  Only the residue classes carried by the seed are
    evolved.  Decoupled levels get ``policy``: "skip" leaves them undetermined,
    "zero" sets them to 0.
    """
    if direction not in ("backward", "forward"):
        raise ValueError(f"direction must be 'backward' or 'forward', got {direction!r}")
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    backward = direction == "backward"
    if from_n is None:
        from_n = psi_seed.n_max if backward else psi_seed.n_min
    if to_n is None:
        to_n = model.n_min if backward else model.n_max
    lo, hi = (to_n, from_n) if backward else (from_n, to_n)
    if hi - lo + 1 < SEED_LEVELS:
        raise ValueError("range must cover at least the 16 seed levels")
    if lo < model.n_min or hi > model.n_max:
        raise ValueError(f"range [{lo}, {hi}] exceeds model range [{model.n_min}, {model.n_max}]")

    seed_lo, seed_hi = (from_n - SEED_LEVELS + 1, from_n) if backward else (from_n, from_n + SEED_LEVELS - 1)
    classes = [r for r in psi_seed.classes if r in model.residue_classes]
    vals = np.full(hi - lo + 1, np.nan, dtype=complex)
    log_scale = np.zeros(LEVEL_STEP)
    for n in range(seed_lo, seed_hi + 1):
        if n % LEVEL_STEP not in classes:
            continue
        if not psi_seed.defined(n):
            raise ValueError(f"seed amplitude at level {n} is missing")
        vals[n - lo] = psi_seed.values[n - psi_seed.n_min]
    for r in classes:
        log_scale[r] = psi_seed.log_scale[r]

    undetermined: set[int] = set()
    log: list[str] = []
    if backward:
        rows = range(seed_lo + 7, lo + 7, -1)  # row n produces level n - 8
    else:
        rows = range(seed_hi - 7, hi - 7)  # row n produces level n + 8
    for n in rows:
        target = n - 8 if backward else n + 8
        r = target % LEVEL_STEP
        if r not in classes:
            continue
        try:
            vals[target - lo] = _solve(model, matter, n, vals, lo, undetermined, direction)
        except DecoupledLevel as exc:
            if policy == "zero":
                vals[target - lo] = 0.0
            else:
                undetermined.add(exc.level)
            log.append(f"level {exc.level}: decoupled, policy={policy}")
            continue
        if abs(vals[target - lo]) > RENORM_THRESHOLD:
            idx = np.arange((r - lo) % LEVEL_STEP, len(vals), LEVEL_STEP)
            block = vals[idx]
            peak = np.nanmax(np.abs(block))
            vals[idx] = block / peak
            log_scale[r] += math.log(peak)

    return WaveFunction(
        lo,
        vals,
        log_scale=log_scale,
        classes=tuple(classes),
        undetermined=tuple(sorted(undetermined)),
        policy_log=tuple(log),
    )


@dataclass(frozen=True)
class SolutionBasis:
    """Independent solutions on a common range, checked by the rank of their seed block."""

    elements: tuple
    seed_levels: tuple  # (lo, hi) of the levels used to test independence

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ValueError("empty basis")
        lo, hi = self.seed_levels
        block = np.column_stack([_unit(w.restrict(lo, hi).amplitudes(relative=True)) for w in self.elements])
        block = np.nan_to_num(block, nan=0.0)
        rank = np.linalg.matrix_rank(block)
        if rank < len(self.elements):
            raise RankDeficient(f"seed block has rank {rank} for {len(self.elements)} elements")

    @property
    def dimension(self) -> int:
        return len(self.elements)

    @property
    def n_min(self) -> int:
        return max(w.n_min for w in self.elements)

    @property
    def n_max(self) -> int:
        return min(w.n_max for w in self.elements)


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.nansum(np.abs(v) ** 2))
    return v / norm if norm > 0 else v


def unit_seed(n_top: int, position: int, direction: str = "backward") -> WaveFunction:
    """Seed that is 1 at one of the 16 seed levels and 0 on the others in its class."""
    levels = range(n_top - SEED_LEVELS + 1, n_top + 1) if direction == "backward" else range(
        n_top, n_top + SEED_LEVELS
    )
    levels = list(levels)
    target = levels[position]
    r = target % LEVEL_STEP
    amps = {n: (1.0 if n == target else 0.0) for n in levels if n % LEVEL_STEP == r}
    return WaveFunction.from_levels(amps, classes=(r,))


def solution_basis(
    model: CoefficientModel,
    matter: MatterModel = VACUUM,
    n_range: tuple[int, int] | None = None,
    classes: Iterable[int] | None = None,
    policy: str = "skip",
) -> SolutionBasis:
    """Evolve one unit seed per seed level (4 per residue class) down from the top of the range."""
    lo, hi = n_range if n_range is not None else (model.n_min, model.n_max)
    if hi < SEED_LEVELS or lo > -SEED_LEVELS:
        raise ValueError("range must span at least 4 levels per residue class on each side of 0")
    classes = model.residue_classes if classes is None else tuple(sorted(set(classes)))
    elements = []
    for pos in range(SEED_LEVELS):
        seed = unit_seed(hi, pos)
        if seed.classes[0] not in classes:
            continue
        elements.append(evolve(seed, model, matter, from_n=hi, to_n=lo, policy=policy))
    return SolutionBasis(tuple(elements), (hi - SEED_LEVELS + 1, hi))
