"""Big-integer dynamic programming over area bins.

Each spin's area quantum is floored to an integer number of bins, so the bin
index of a puncture sequence is additive and every configuration in bin b
splits into a prefix in bin b - q(last spin) plus its last spin.  Alongside
the counts the DP tracks the exact minimum and maximum true area of the
configurations in each bin.  A bin is then either inside the window, outside
it, or straddling an edge; only straddling bins are ambiguous, and they are
resolved by halving the bin width.

All counts are Python integers held in numpy object arrays.  Bins are filled
in blocks no longer than the smallest quantum, so every block depends only on
bins already final.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from polymer.entropy.ensemble import CountingRule, CountResult, HorizonEnsemble
from polymer.spectrum import spin_area

MAX_BINS = 4_000_000
# refinement stops once another halving would exceed this many bins (or
# table cells, for the two-dimensional projection table)
MAX_REFINE_BINS = 1 << 18
MAX_REFINE_CELLS = 1 << 22


@dataclass
class _Pass:
    counts: np.ndarray  # per bin (object); for projection: m-sum = 0 column
    lo: np.ndarray
    hi: np.ndarray
    occupancy: np.ndarray | None  # (n_spins, n_bins) object, or None
    cells: int = 0  # size of the full DP table


def _setup(ensemble: HorizonEnsemble, rule: CountingRule, width: float):
    spins = rule.spins(ensemble)
    quanta = [spin_area(k, ensemble.gamma) for k in spins]
    steps = [int(a // width) for a in quanta]
    if steps and min(steps) < 1:
        raise ValueError("bin width must be smaller than the smallest area quantum")
    n_bins = int(ensemble.upper // width) + 1
    if n_bins > MAX_BINS:
        raise MemoryError(f"{n_bins} bins requested; raise the bin width")
    mult = [rule.multiplicity(k) for k in spins]
    return spins, quanta, steps, mult, n_bins


def _ranges_update(lo, hi, dst, src, area):
    np.minimum(lo[dst], lo[src] + area, out=lo[dst])
    np.maximum(hi[dst], hi[src] + area, out=hi[dst])


def _ordered_pass(ensemble, rule, width, occupancy=False) -> _Pass:
    spins, quanta, steps, mult, n_bins = _setup(ensemble, rule, width)
    D = np.zeros(n_bins, dtype=object)
    D[0] = 1
    lo = np.full(n_bins, np.inf)
    hi = np.full(n_bins, -np.inf)
    lo[0] = hi[0] = 0.0
    O = np.zeros((len(spins), n_bins), dtype=object) if occupancy else None
    if not spins:
        return _Pass(D, lo, hi, O)

    block = min(steps)
    for b0 in range(1, n_bins, block):
        b1 = min(b0 + block, n_bins)
        for s, (q, m, area) in enumerate(zip(steps, mult, quanta)):
            if b1 - q <= 0:
                continue
            start = max(b0, q)
            dst = slice(start, b1)
            src = slice(start - q, b1 - q)
            D[dst] += m * D[src]
            _ranges_update(lo, hi, dst, src, area)
            if O is not None:
                O[:, dst] += m * O[:, src]
                O[s, dst] += m * D[src]
    return _Pass(D, lo, hi, O)


def _unordered_pass(ensemble, rule, width) -> _Pass:
    spins, quanta, steps, mult, n_bins = _setup(ensemble, rule, width)
    D = np.zeros(n_bins, dtype=object)
    D[0] = 1
    lo = np.full(n_bins, np.inf)
    hi = np.full(n_bins, -np.inf)
    lo[0] = hi[0] = 0.0
    # each (spin, internal state) pair is its own item type: unbounded knapsack
    for q, m, area in zip(steps, mult, quanta):
        for _ in range(m):
            for b0 in range(q, n_bins, q):
                dst = slice(b0, min(b0 + q, n_bins))
                src = slice(b0 - q, dst.stop - q)
                D[dst] += D[src]
                _ranges_update(lo, hi, dst, src, area)
    return _Pass(D, lo, hi, None)


def _box_stride2(src: np.ndarray, k: int) -> np.ndarray:
    """Convolve rows with x^-k + x^(-k+2) + ... + x^k (indices in half-units of m)."""
    rows, L = src.shape
    S = np.empty_like(src)
    S[:, 0::2] = np.cumsum(src[:, 0::2], axis=1)
    S[:, 1::2] = np.cumsum(src[:, 1::2], axis=1)
    low = np.zeros((rows, k + 2), dtype=object)
    # beyond the last column the prefix sums stay constant per parity
    high = np.stack([S[:, L - 2 + ((j - L) % 2)] for j in range(L, L + k)], axis=1) if k else (
        np.zeros((rows, 0), dtype=object)
    )
    E = np.concatenate([low, S, high], axis=1)
    return E[:, 2 * k + 2: 2 * k + 2 + L] - E[:, :L]


def _projection_pass(ensemble, rule, width) -> _Pass:
    spins, quanta, steps, mult, n_bins = _setup(ensemble, rule, width)
    # every spin satisfies area >= 4 pi gamma * twice_j, which bounds |2 sum m|
    m_max = max(1, int(ensemble.upper / (4.0 * math.pi * ensemble.gamma)))
    L = 2 * m_max + 1
    D = np.zeros((n_bins, L), dtype=object)
    D[0, m_max] = 1
    lo = np.full(n_bins, np.inf)
    hi = np.full(n_bins, -np.inf)
    lo[0] = hi[0] = 0.0
    if not spins:
        return _Pass(D[:, m_max], lo, hi, None, D.size)

    block = min(steps)
    for b0 in range(1, n_bins, block):
        b1 = min(b0 + block, n_bins)
        for k, q, area in zip(spins, steps, quanta):
            if b1 - q <= 0:
                continue
            start = max(b0, q)
            dst = slice(start, b1)
            src = slice(start - q, b1 - q)
            D[dst] += _box_stride2(D[src], k)
            _ranges_update(lo, hi, dst, src, area)
    return _Pass(D[:, m_max].copy(), lo, hi, None, D.size)


def _tally(p: _Pass, ensemble: HorizonEnsemble):
    lower, upper = ensemble.lower, ensemble.upper
    touches = (p.hi >= lower) & (p.lo <= upper)
    inside = (p.lo >= lower) & (p.hi <= upper)
    straddle = touches & ~inside
    count = int(p.counts[touches].sum()) if touches.any() else 0
    boundary = int(p.counts[straddle].sum()) if straddle.any() else 0
    occ = None
    if p.occupancy is not None and touches.any():
        occ = [int(row[touches].sum()) for row in p.occupancy]
    return count, boundary, occ


def count_states_dp(
    ensemble: HorizonEnsemble,
    rule: CountingRule,
    bin_width: float | None = None,
    *,
    ordered: bool = True,
    resolve_boundary: bool = True,
    max_refinements: int = 20,
    track_occupancy: bool = False,
    boundary_rtol: float = 0.0,
) -> CountResult:
    """Count puncture sequences with total area in the window.

    The returned count includes every bin whose area range touches the window
    (an upper count).  ``boundary_count`` is the part contributed by bins that
    straddle a window edge; with ``resolve_boundary`` the bin width is halved
    until no such bin carries states, which makes the count exact.  A positive
    ``boundary_rtol`` stops refining once ``boundary_count <= boundary_rtol *
    count``; the exact count then lies in ``[count - boundary_count, count]``.
    """
    delta = ensemble.delta
    width = delta / 16.0 if bin_width is None else float(bin_width)
    if not width > 0:
        raise ValueError("bin_width must be positive")
    if width > delta / 4.0:
        raise ValueError(f"bin_width {width:g} is too coarse for delta {delta:g} (needs <= delta/4)")
    if rule.projection_constraint and not ordered:
        raise ValueError("unordered counting with the projection constraint is not supported")

    refinements = 0
    while True:
        if rule.projection_constraint:
            p = _projection_pass(ensemble, rule, width)
        elif ordered:
            p = _ordered_pass(ensemble, rule, width)
        else:
            p = _unordered_pass(ensemble, rule, width)
        count, boundary, occ = _tally(p, ensemble)
        if not (resolve_boundary and boundary) or refinements >= max_refinements:
            break
        if boundary <= boundary_rtol * count:
            break
        if (len(p.counts) - 1) * 2 > MAX_REFINE_BINS or 2 * p.cells > MAX_REFINE_CELLS:
            break
        width /= 2.0
        refinements += 1

    if track_occupancy and ordered and not rule.projection_constraint:
        p = _ordered_pass(ensemble, rule, width, occupancy=True)
        count, boundary, occ = _tally(p, ensemble)

    spins = rule.spins(ensemble)
    histogram = None
    if occ is not None and count:
        histogram = {k: o / count for k, o in zip(spins, occ)}
    return CountResult(
        count=count,
        rule=rule,
        ensemble=ensemble,
        method="dp",
        ordered=ordered,
        histogram=histogram,
        exact=boundary == 0,
        boundary_count=boundary,
        bin_width=width,
        extra={"refinements": refinements},
    )
