from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from polymer.entropy.dp import count_states_dp
from polymer.entropy.ensemble import BudgetExceeded, CountingRule, CountResult, HorizonEnsemble
from polymer.entropy.exact import count_states_exact
from polymer.spectrum import min_nonzero_area


def _entropies(results: Sequence[CountResult | float]) -> np.ndarray:
    out = []
    for r in results:
        s = r.entropy if isinstance(r, CountResult) else r
        if s is None:
            raise ValueError("a sample has zero count; its entropy is undefined")
        out.append(float(s))
    return np.asarray(out)


def _common_gamma(results) -> float | None:
    gammas = {r.ensemble.gamma for r in results if isinstance(r, CountResult)}
    rules = {r.rule for r in results if isinstance(r, CountResult)}
    if len(gammas) > 1 or len(rules) > 1:
        raise ValueError("all samples must share one counting rule and one gamma")
    return gammas.pop() if gammas else None


def entropy_slope_fit(
    areas: Sequence[float],
    results: Sequence[CountResult | float],
    gamma: float | None = None,
) -> tuple[float, float]:
    """Least-squares slope of ln N against area, and the gamma that makes it a/4.

    Returns ``(slope, implied_gamma0)`` where ``implied_gamma0 = 4 * slope * gamma``:
    entropy scales as 1/gamma, so at that gamma the slope would be exactly 1/4.
    """
    a = np.asarray(areas, dtype=float)
    if len(a) != len(results):
        raise ValueError("areas and results differ in length")
    if len(a) < 10:
        raise ValueError(f"need at least 10 area samples, got {len(a)}")
    if a.min() <= 0 or a.max() / a.min() < 4.0:
        raise ValueError("area samples must span a factor of at least 4")
    g = _common_gamma(results)
    if gamma is None:
        gamma = g
    if gamma is None:
        raise ValueError("gamma is required when entropies are given as plain numbers")
    S = _entropies(results)
    X = np.column_stack([a, np.ones_like(a)])
    if np.linalg.cond(X) > 1e12:
        raise ValueError("ill-conditioned fit: degenerate area range")
    (slope, _), *_ = np.linalg.lstsq(X, S, rcond=None)
    return float(slope), float(4.0 * slope * gamma)


@dataclass
class SubleadingFit:
    log_coefficient: float
    fit_residual: float
    constant_residual: float
    slope: float
    conclusive: bool
    note: str = ""

    def __iter__(self):
        yield self.log_coefficient
        yield self.fit_residual


def subleading_fit(
    areas: Sequence[float],
    results: Sequence[CountResult | float],
    slope: float | None = None,
) -> SubleadingFit:
    """Fit the remainder of ln N after the linear term against ln a.

    With ``slope`` given, ``S - slope*a`` is fitted by ``c ln a + k`` and by
    ``k`` alone.  Without it the slope is refitted jointly (``s a + c ln a + k``
    against ``s a + k``), which keeps the log term from leaking into the slope.
    Only whether the log model improves on the constant model is judged; the
    coefficient itself is reported.
    """
    a = np.asarray(areas, dtype=float)
    if len(a) != len(results) or len(a) < 4:
        raise ValueError("need matching areas and results, at least 4 samples")
    if a.min() <= 0 or a.max() / a.min() < 10.0 * (1 - 1e-9):
        raise ValueError("insufficient range: areas must span at least one decade")
    S = _entropies(results)
    ones = np.ones_like(a)
    if slope is None:
        X_log = np.column_stack([a, np.log(a), ones])
        X_const = np.column_stack([a, ones])
        target = S
    else:
        X_log = np.column_stack([np.log(a), ones])
        X_const = ones[:, None]
        target = S - slope * a
    coef_log, *_ = np.linalg.lstsq(X_log, target, rcond=None)
    coef_const, *_ = np.linalg.lstsq(X_const, target, rcond=None)
    res_log = float(np.sqrt(np.mean((X_log @ coef_log - target) ** 2)))
    res_const = float(np.sqrt(np.mean((X_const @ coef_const - target) ** 2)))
    scale = max(1.0, float(np.max(np.abs(target))))
    conclusive = res_const > 1e-12 * scale and res_log < res_const * (1 - 1e-6)
    log_c = float(coef_log[1] if slope is None else coef_log[0])
    fitted_slope = float(coef_log[0]) if slope is None else float(slope)
    note = "" if conclusive else "inconclusive: log term gives no residual improvement"
    return SubleadingFit(log_c, res_log, res_const, fitted_slope, conclusive, note)


def count_states(
    ensemble: HorizonEnsemble,
    rule: CountingRule,
    method: str = "auto",
    bin_width: float | None = None,
    ordered: bool = True,
    resolve_boundary: bool = True,
    max_configurations: int = 10**5,
) -> CountResult:
    """Exact enumeration when cheap enough (``auto``), DP otherwise."""
    if method not in ("auto", "exact", "dp"):
        raise ValueError(f"unknown counting method {method!r}")
    if method != "dp":
        try:
            return count_states_exact(
                ensemble,
                rule,
                ordered=ordered,
                max_configurations=max_configurations if method == "auto" else 10**9,
            )
        except BudgetExceeded:
            if method == "exact":
                raise
    return count_states_dp(ensemble, rule, bin_width, ordered=ordered, resolve_boundary=resolve_boundary)


def dominant_configuration(ensemble: HorizonEnsemble, rule: CountingRule) -> dict[int, float]:
    """Mean number of punctures per spin (keyed by twice_j) among counted states."""
    if rule.projection_constraint:
        result = count_states_exact(ensemble, rule)
    else:
        result = count_states_dp(ensemble, rule, track_occupancy=True, resolve_boundary=False)
    if not result.count:
        raise ValueError("no states in the window")
    return dict(result.histogram)


def r1_quantized_areas(gamma: float, n_punctures: Sequence[int]) -> list[float]:
    """Areas of n j=1/2 punctures, where rule R1 gives exactly 2**n states."""
    quantum = min_nonzero_area(gamma).value
    return [quantum * n for n in n_punctures]


def r1_window(gamma: float, n: int) -> HorizonEnsemble:
    """Window around n j=1/2 quanta that excludes n - 1 and n + 1."""
    quantum = min_nonzero_area(gamma).value
    a = quantum * n
    return HorizonEnsemble(a, gamma, min(0.25 * quantum, max(1.0, math.sqrt(a)) / 10.0))


@dataclass
class SolarExtrapolation:
    entropy: float
    punctures: float
    area: float
    gamma: float
    slope: float
    note: str = "closed-form extrapolation of the fitted slope; not a computed count"


def extrapolate_solar(gamma: float, slope: float, a_solar: float = 1e77) -> SolarExtrapolation:
    """Order-of-magnitude entropy and puncture number for a solar-mass horizon."""
    if a_solar < 0:
        raise ValueError("area must be non-negative")
    return SolarExtrapolation(
        entropy=slope * a_solar,
        punctures=a_solar / min_nonzero_area(gamma).value,
        area=a_solar,
        gamma=gamma,
        slope=slope,
    )
