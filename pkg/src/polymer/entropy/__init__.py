"""Micro-canonical horizon state counting."""

from polymer.entropy.analysis import (
    SolarExtrapolation,
    SubleadingFit,
    count_states,
    dominant_configuration,
    entropy_slope_fit,
    extrapolate_solar,
    r1_quantized_areas,
    r1_window,
    subleading_fit,
)
from polymer.entropy.dp import count_states_dp
from polymer.entropy.ensemble import (
    GAMMA_0,
    BudgetExceeded,
    CountingRule,
    CountResult,
    HorizonEnsemble,
    decimal_digits,
    default_delta,
)
from polymer.entropy.exact import count_states_exact

__all__ = [
    "GAMMA_0",
    "BudgetExceeded",
    "CountingRule",
    "CountResult",
    "HorizonEnsemble",
    "SolarExtrapolation",
    "SubleadingFit",
    "count_states",
    "count_states_dp",
    "count_states_exact",
    "decimal_digits",
    "default_delta",
    "dominant_configuration",
    "entropy_slope_fit",
    "extrapolate_solar",
    "r1_quantized_areas",
    "r1_window",
    "subleading_fit",
]
