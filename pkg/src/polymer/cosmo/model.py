"""Coefficient models for the five-term difference equation

    c_n psi_{n+8} + d_n psi_{n+4} + e_n psi_n + f_n psi_{n-4} + g_n psi_{n-8}
        = gamma * h(n) * psi_n

Closed forms for the coefficients are not fixed here.  A model is a set of
tables over a contiguous range of levels, read from a JSON file.  The one
family this module can generate (``flux_form``) exists to produce the shipped
illustrative example; it is not derived from the full theory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

COEFFICIENTS = ("c", "d", "e", "f", "g")
TABLES = COEFFICIENTS + ("a_eig", "b_eig")
CURVATURE_BOUND = 256.0 / 81.0
LEVEL_STEP = 4

SHIPPED_MODELS = ("example", "counter_bound", "counter_product", "counter_singular")


class ModelError(ValueError):
    """A model file is malformed."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CoefficientModel:
    gamma: float
    n_min: int
    n_max: int
    c: np.ndarray
    d: np.ndarray
    e: np.ndarray
    f: np.ndarray
    g: np.ndarray
    a_eig: np.ndarray
    b_eig: np.ndarray
    decoupled_levels: tuple = ()
    continuum_operator: dict | None = None
    description: str = ""
    residue_classes: tuple = (0, 1, 2, 3)

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ModelError(f"gamma must be positive, got {self.gamma}")
        if self.n_max < self.n_min:
            raise ModelError("n_max < n_min")
        size = self.n_max - self.n_min + 1
        for name in TABLES:
            arr = _frozen(getattr(self, name))
            if arr.shape != (size,):
                raise ModelError(f"table {name!r} has {arr.size} entries, expected {size}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "decoupled_levels", tuple(sorted(int(x) for x in self.decoupled_levels)))
        classes = tuple(sorted(set(int(r) for r in self.residue_classes)))
        if not classes or any(r not in range(LEVEL_STEP) for r in classes):
            raise ModelError(f"residue_classes must be a non-empty subset of 0..3, got {classes}")
        object.__setattr__(self, "residue_classes", classes)

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def index(self, n: int) -> int:
        if not self.n_min <= n <= self.n_max:
            raise IndexError(f"level {n} outside model range [{self.n_min}, {self.n_max}]")
        return n - self.n_min

    def row(self, n: int) -> tuple[float, float, float, float, float]:
        i = self.index(n)
        return (self.c[i], self.d[i], self.e[i], self.f[i], self.g[i])

    def a(self, n: int) -> float:
        return float(self.a_eig[self.index(n)])

    def b(self, n: int) -> float:
        return float(self.b_eig[self.index(n)])

    def scaled(self, factor: float) -> "CoefficientModel":
        """Multiply every recurrence coefficient by ``factor``."""
        return replace(self, **{k: getattr(self, k) * factor for k in COEFFICIENTS})

    def with_tables(self, **tables) -> "CoefficientModel":
        return replace(self, **tables)

    def to_dict(self) -> dict:
        out = {
            "description": self.description,
            "gamma": self.gamma,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "level_step": LEVEL_STEP,
            "residue_classes": list(self.residue_classes),
            "decoupled_levels": list(self.decoupled_levels),
        }
        for name in TABLES:
            out[name] = [float(x) for x in getattr(self, name)]
        if self.continuum_operator is not None:
            out["continuum_operator"] = dict(self.continuum_operator)
        return out


@dataclass(frozen=True)
class MatterModel:
    """Diagonal action h(n) of the matter Hamiltonian on the reduced matter sector."""

    h: Callable[[int], float] = field(default=lambda n: 0.0)
    label: str = "vacuum"

    def __call__(self, n: int) -> float:
        return float(self.h(n))


VACUUM = MatterModel()


def _numeric_array(name, raw, size):
    if not isinstance(raw, list):
        raise ModelError(f"field {name!r} must be an array")
    if len(raw) != size:
        raise ModelError(f"field {name!r} has {len(raw)} entries, expected {size}")
    for i, x in enumerate(raw):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ModelError(f"field {name!r}: non-numeric entry {x!r} at index {i}")
        if math.isnan(x):
            raise ModelError(f"field {name!r}: NaN at index {i}")
    return raw


def model_from_dict(data: Mapping) -> CoefficientModel:
    for key in ("gamma", "n_min", "n_max") + TABLES:
        if key not in data:
            raise ModelError(f"missing field {key!r}")
    gamma = data["gamma"]
    if isinstance(gamma, bool) or not isinstance(gamma, (int, float)):
        raise ModelError(f"field 'gamma': non-numeric value {gamma!r}")
    if not gamma > 0:
        raise ModelError(f"gamma must be positive, got {gamma}")
    for key in ("n_min", "n_max"):
        if isinstance(data[key], bool) or not isinstance(data[key], int):
            raise ModelError(f"field {key!r} must be an integer")
    if data.get("level_step", LEVEL_STEP) != LEVEL_STEP:
        raise ModelError(f"level_step must be {LEVEL_STEP}, got {data['level_step']!r}")
    size = data["n_max"] - data["n_min"] + 1
    if size < 1:
        raise ModelError("n_max < n_min")
    tables = {name: _numeric_array(name, data[name], size) for name in TABLES}
    decoupled = data.get("decoupled_levels", [])
    if not isinstance(decoupled, list) or any(
        isinstance(x, bool) or not isinstance(x, int) for x in decoupled
    ):
        raise ModelError("decoupled_levels must be an array of integers")
    for lvl in decoupled:
        if not data["n_min"] <= lvl <= data["n_max"]:
            raise ModelError(f"decoupled level {lvl} outside the tabulated range")
    classes = data.get("residue_classes", [0, 1, 2, 3])
    if not isinstance(classes, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in classes):
        raise ModelError("residue_classes must be an array of integers")
    operator = data.get("continuum_operator")
    if operator is not None and not isinstance(operator, dict):
        raise ModelError("continuum_operator must be an object")
    return CoefficientModel(
        gamma=float(gamma),
        n_min=data["n_min"],
        n_max=data["n_max"],
        decoupled_levels=tuple(decoupled),
        continuum_operator=operator,
        description=str(data.get("description", "")),
        residue_classes=tuple(classes),
        **tables,
    )


def load_model(source) -> CoefficientModel:
    """Read a model from a path, a JSON string's parsed dict, or a shipped name."""
    if isinstance(source, Mapping):
        return model_from_dict(source)
    if isinstance(source, str) and source in SHIPPED_MODELS:
        return shipped_model(source)
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ModelError(f"{path}: top level must be an object")
    return model_from_dict(data)


def save_model(model: CoefficientModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=1) + "\n")


def shipped_model(name: str) -> CoefficientModel:
    if name not in SHIPPED_MODELS:
        raise KeyError(f"no shipped model {name!r}; choose from {SHIPPED_MODELS}")
    text = resources.files("polymer.data").joinpath("models", f"{name}.json").read_text()
    return model_from_dict(json.loads(text))


# --- the illustrative flux-form family -------------------------------------

# b_n = B (|n+1|^(3/4) - |n-1|^(3/4))^2 peaks at n = +-1 with value B * 2^(3/2)
_B_EXAMPLE = CURVATURE_BOUND / 2.0 ** 1.5
# a_n = A sqrt|n| with A * B * 9/4 = 1, so that a_n b_n -> 1
_A_EXAMPLE = 4.0 / (9.0 * _B_EXAMPLE)
GAMMA_EXAMPLE = math.log(2.0) / (math.sqrt(3.0) * math.pi)

EXAMPLE_OPERATOR = {
    "type": "flux_form",
    "variable": "p = kappa * gamma * n, a = sqrt(|p|)",
    "kappa": _A_EXAMPLE ** 2 / GAMMA_EXAMPLE,
    "wide_weight": 1.0,
    "narrow_weight": -0.5,
    "weight_offset": 1.0,
    "class_term": 0.25,
    "orientation_term": 0.125,
}


def flux_weight(p, offset):
    return np.sqrt(np.asarray(p, dtype=float) ** 2 + offset ** 2)


def flux_form_coefficients(params: Mapping, gamma: float, levels) -> dict[str, np.ndarray]:
    """Recurrence coefficients of the flux-form family on the given levels.

    With lattice p_n = kappa*gamma*n and s = 4*kappa*gamma the rows discretise
    (alpha + beta) d/dp (W dF/dp), W(p) = sqrt(p^2 + w0^2), by a wide
    (step 2s) and a narrow (step s) flux stencil.  Two extra diagonal terms
    vanish in the continuum limit or live at n < 0:

    * class term  v sin^2(pi n / 4) W s: distinguishes the residue classes;
      class 0 keeps constants as exact solutions for n >= 0.
    * orientation term tau W / s^2 for n < 0: moves both non-smooth root
      pairs onto the unit circle, so solutions oscillate on that side.
    """
    n = np.asarray(levels, dtype=float)
    lam = params["kappa"] * gamma
    s = LEVEL_STEP * lam
    p = lam * n
    w0 = params["weight_offset"]
    alpha, beta = params["wide_weight"], params["narrow_weight"]
    c = alpha * flux_weight(p + s, w0) / (4.0 * s * s)
    g = alpha * flux_weight(p - s, w0) / (4.0 * s * s)
    d = beta * flux_weight(p + s / 2, w0) / (s * s)
    f = beta * flux_weight(p - s / 2, w0) / (s * s)
    W = flux_weight(p, w0)
    e = -(c + d + f + g)
    e = e + params["class_term"] * np.sin(math.pi * n / 4.0) ** 2 * W * s
    e = e + np.where(n < 0, params["orientation_term"] * W / (s * s), 0.0)
    return {"c": c, "d": d, "e": e, "f": f, "g": g}


def flux_form_scale_factor(params: Mapping, gamma: float, levels) -> np.ndarray:
    return np.sqrt(params["kappa"] * gamma * np.abs(np.asarray(levels, dtype=float)))


def example_curvature(levels, gamma: float = GAMMA_EXAMPLE) -> np.ndarray:
    n = np.abs(np.asarray(levels, dtype=float))
    core = np.abs(n + 1) ** 0.75 - np.abs(n - 1) ** 0.75
    return _B_EXAMPLE * core ** 2 * math.sqrt(GAMMA_EXAMPLE / gamma)


def build_example_model(n_min: int = -200, n_max: int = 200) -> CoefficientModel:
    levels = np.arange(n_min, n_max + 1)
    params = EXAMPLE_OPERATOR
    coeffs = flux_form_coefficients(params, GAMMA_EXAMPLE, levels)
    return CoefficientModel(
        gamma=GAMMA_EXAMPLE,
        n_min=n_min,
        n_max=n_max,
        a_eig=flux_form_scale_factor(params, GAMMA_EXAMPLE, levels),
        b_eig=example_curvature(levels),
        continuum_operator=dict(params),
        description=(
            "Illustrative flux-form model (not derived from the full theory): "
            "a_n = A sqrt|n|, b_n = B (|n+1|^(3/4) - |n-1|^(3/4))^2 with sup b = 256/81"
        ),
        **coeffs,
    )


def build_counterexample(kind: str) -> CoefficientModel:
    """Example model broken in exactly one validated property."""
    base = build_example_model()
    levels = base.levels
    if kind == "counter_bound":
        b = base.b_eig.copy()
        b[np.abs(levels) == 1] = 300.0 / 81.0
        model = base.with_tables(b_eig=b)
        note = "curvature eigenvalue raised to 300/81 at n = +-1"
    elif kind == "counter_product":
        b = base.b_eig.copy()
        b[levels >= 100] *= 1.001
        model = base.with_tables(b_eig=b)
        note = "a_n b_n - 1 about 1e-3 for n >= 100"
    elif kind == "counter_singular":
        g = base.g.copy()
        g[base.index(20)] = 0.0
        model = base.with_tables(g=g)
        note = "g_20 = 0 without a declared decoupled level"
    else:
        raise KeyError(kind)
    return replace(model, description=f"Counterexample: {note}")


def build_shipped(name: str) -> CoefficientModel:
    return build_example_model() if name == "example" else build_counterexample(name)


def write_shipped_models(directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in SHIPPED_MODELS:
        path = directory / f"{name}.json"
        save_model(build_shipped(name), path)
        paths.append(path)
    return paths
