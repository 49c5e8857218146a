"""Checks a coefficient model against the properties a valid model must have."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from polymer.cosmo.model import CURVATURE_BOUND, CoefficientModel
from polymer.cosmo.wdw import wdw_limit_report

BOUND_RTOL = 1e-9
PRODUCT_LEVEL = 100
PRODUCT_TOL = 5e-4


@dataclass
class Check:
    name: str
    passed: bool | None  # None: skipped
    margin: float | None = None
    detail: str = ""
    location: int | None = None


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)
    description: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if c.passed is False]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def format(self) -> str:
        lines = []
        for c in self.checks:
            verdict = {True: "PASS", False: "FAIL", None: "SKIP"}[c.passed]
            margin = "" if c.margin is None else f" margin={c.margin:.3e}"
            where = "" if c.location is None else f" at n={c.location}"
            lines.append(f"{verdict} {c.name}{margin}{where}: {c.detail}")
        lines.append("model " + ("passes" if self.passed else "fails: " + ", ".join(self.failed)))
        return "\n".join(lines)


def _first_bad(levels, mask):
    idx = np.flatnonzero(mask)
    return int(levels[idx[0]]) if idx.size else None


def check_curvature_bound(model: CoefficientModel) -> Check:
    b, levels = model.b_eig, model.levels
    bad = ~np.isfinite(b)
    if bad.any():
        return Check("curvature_bound", False, None, "curvature eigenvalue diverges", _first_bad(levels, bad))
    if (b < 0).any():
        return Check("curvature_bound", False, None, "negative curvature eigenvalue", _first_bad(levels, b < 0))
    i = int(np.argmax(b))
    margin = abs(b[i] - CURVATURE_BOUND) / CURVATURE_BOUND
    ok = margin <= BOUND_RTOL
    detail = f"sup b = {b[i]:.12g}, bound 256/81 = {CURVATURE_BOUND:.12g}"
    return Check("curvature_bound", bool(ok), float(margin), detail, int(levels[i]))


def check_product(model: CoefficientModel) -> Check:
    if not model.n_min <= PRODUCT_LEVEL <= model.n_max:
        return Check("product", False, None, f"level {PRODUCT_LEVEL} not tabulated")
    n = np.arange(PRODUCT_LEVEL, model.n_max + 1)
    dev = np.abs(model.a_eig[n - model.n_min] * model.b_eig[n - model.n_min] - 1.0)
    if not np.isfinite(dev).all():
        return Check("product", False, None, "non-finite a*b", _first_bad(n, ~np.isfinite(dev)))
    at100 = float(dev[0])
    if at100 > PRODUCT_TOL:
        return Check("product", False, at100, f"|a b - 1| = {at100:.3e} > {PRODUCT_TOL:g} at n = 100", PRODUCT_LEVEL)
    rises = np.diff(dev) > 1e-15
    if rises.any():
        return Check("product", False, at100, "|a b - 1| increases beyond n = 100", _first_bad(n[1:], rises))
    return Check("product", True, at100, f"|a b - 1| = {at100:.3e} at n = 100, non-increasing after")


def check_scale_factor(model: CoefficientModel) -> Check:
    a, levels = model.a_eig, model.levels
    bad = ~np.isfinite(a) | (a < 0)
    if bad.any():
        return Check("scale_factor", False, None, "scale factor negative or non-finite", _first_bad(levels, bad))
    # strictly increasing away from n = 0 on each side
    pos, neg = levels >= 0, levels <= 0
    up = np.diff(a[pos]) <= 0
    if up.any():
        return Check("scale_factor", False, None, "not strictly increasing for n >= 0", _first_bad(levels[pos][1:], up))
    down = np.diff(a[neg]) >= 0
    if down.any():
        return Check("scale_factor", False, None, "not strictly increasing in |n| for n <= 0",
                     _first_bad(levels[neg][1:], down))
    detail = "discrete, strictly increasing in |n|"
    if model.n_min <= 0 <= model.n_max:
        detail += f"; a(0) = {model.a(0):g}"
    return Check("scale_factor", True, None, detail)


def check_coefficients(model: CoefficientModel) -> Check:
    levels = model.levels
    for name in ("c", "d", "e", "f", "g"):
        bad = ~np.isfinite(getattr(model, name))
        if bad.any():
            return Check("singular_coefficients", False, None, f"non-finite {name}", _first_bad(levels, bad))
    declared = set(model.decoupled_levels)
    problems = []
    # rows used by both backward and forward evolution
    for n in range(model.n_min + 8, model.n_max - 8 + 1):
        c, _, _, _, g = model.row(n)
        if g == 0.0 and (n - 8) not in declared:
            problems.append((n, f"g_{n} = 0 with level {n - 8} not declared decoupled"))
        if c == 0.0 and (n + 8) not in declared:
            problems.append((n, f"c_{n} = 0 with level {n + 8} not declared decoupled"))
    # a decoupled amplitude must not enter any other row
    for lvl in sorted(declared):
        for row, name, k in ((lvl - 8, "c", 0), (lvl - 4, "d", 1), (lvl, "e", 2), (lvl + 4, "f", 3)):
            if model.n_min <= row <= model.n_max and model.row(row)[k] != 0.0:
                problems.append((row, f"{name}_{row} != 0 couples decoupled level {lvl}"))
    if problems:
        n, msg = problems[0]
        more = f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""
        return Check("singular_coefficients", False, None, msg + more, n)
    small = min(np.min(np.abs(model.g)), np.min(np.abs(model.c)))
    detail = "pivots nonzero" + (f"; decoupled levels {sorted(declared)}" if declared else "")
    return Check("singular_coefficients", True, float(small), detail)


def check_wdw_limit(model: CoefficientModel) -> Check:
    rep = wdw_limit_report(model)
    if rep.skipped:
        return Check("wdw_limit", None, None, rep.note)
    detail = "residuals " + ", ".join(f"{r:.3e}" for r in rep.residuals) + " along gamma " + ", ".join(
        f"{g:g}" for g in rep.gammas
    )
    return Check("wdw_limit", rep.converging, rep.residuals[-1], detail)


CHECKS = (check_curvature_bound, check_product, check_scale_factor, check_coefficients, check_wdw_limit)


def validate_model(model: CoefficientModel) -> ValidationReport:
    """Run every check; failures are report entries, never exceptions."""
    return ValidationReport([check(model) for check in CHECKS], model.description)
