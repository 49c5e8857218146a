"""Exact state counting by enumeration of puncture multisets.

Every multiset of spins whose total area lies in the window is visited once.
Its ordered arrangements are counted with a multinomial coefficient, the
internal states with the rule's per-puncture multiplicity.  With the
projection constraint the number of m-assignments summing to zero is read
off the product of the spins' weight polynomials.
"""

from __future__ import annotations

import math
from collections import Counter

from polymer.entropy.ensemble import BudgetExceeded, CountingRule, CountResult, HorizonEnsemble
from polymer.spectrum import spin_area

DEFAULT_MAX_CONFIGURATIONS = 10**9


def estimate_configurations(ensemble: HorizonEnsemble, rule: CountingRule) -> int:
    """Upper bound on the number of spin multisets with area <= a_hor + delta."""
    spins = rule.spins(ensemble)
    if not spins:
        return 1
    width = spin_area(spins[0], ensemble.gamma) / 8.0
    top = int(ensemble.upper / width)
    table = [0] * (top + 1)
    table[0] = 1
    for k in spins:
        step = int(spin_area(k, ensemble.gamma) / width)  # floor: never overestimates area
        for b in range(step, top + 1):
            table[b] += table[b - step]
    return sum(table)


def _zero_m_assignments(twice_js: list[int]) -> int:
    """Number of (m_1..m_N), m_i in {-j_i..j_i}, with sum m_i = 0."""
    # index = sum(2m) + sum(2j)
    poly = [1]
    for k in twice_js:
        new = [0] * (len(poly) + 2 * k)
        for i, c in enumerate(poly):
            if c:
                for s in range(0, 2 * k + 1, 2):
                    new[i + s] += c
        poly = new
    total = sum(twice_js)
    return poly[total] if total < len(poly) else 0


def count_states_exact(
    ensemble: HorizonEnsemble,
    rule: CountingRule,
    *,
    ordered: bool = True,
    max_configurations: int = DEFAULT_MAX_CONFIGURATIONS,
) -> CountResult:
    if rule.projection_constraint and not ordered:
        raise ValueError("unordered counting with the projection constraint is not supported")
    estimate = estimate_configurations(ensemble, rule)
    if estimate > max_configurations:
        raise BudgetExceeded(
            f"about {estimate} multisets below {ensemble.upper:g}; use count_states_dp"
        )

    spins = rule.spins(ensemble)
    quanta = [spin_area(k, ensemble.gamma) for k in spins]
    lo, hi = ensemble.lower, ensemble.upper

    total = 0
    occupancy = Counter()
    chosen: list[int] = []  # indices into spins, non-increasing

    def weight() -> int:
        counts = Counter(chosen)
        n = len(chosen)
        if ordered:
            w = math.factorial(n)
            for c in counts.values():
                w //= math.factorial(c)
            if rule.projection_constraint:
                w *= _zero_m_assignments([spins[i] for i in chosen])
            else:
                for i, c in counts.items():
                    w *= rule.multiplicity(spins[i]) ** c
        else:
            w = 1
            for i, c in counts.items():
                w *= math.comb(c + rule.multiplicity(spins[i]) - 1, c)
        return w

    def visit(top: int, area: float):
        nonlocal total
        for i in range(top + 1):
            a = area + quanta[i]
            if a > hi:
                break
            chosen.append(i)
            if a >= lo:
                w = weight()
                if w:
                    total += w
                    for j, c in Counter(chosen).items():
                        occupancy[spins[j]] += w * c
            visit(i, a)
            chosen.pop()

    visit(len(spins) - 1, 0.0)
    histogram = {k: occupancy[k] / total for k in spins} if total else None
    return CountResult(
        count=total,
        rule=rule,
        ensemble=ensemble,
        method="exact",
        ordered=ordered,
        histogram=histogram,
        extra={"configurations_estimate": estimate},
    )
