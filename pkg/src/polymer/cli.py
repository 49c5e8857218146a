"""Command-line front end: ``polymer {spectrum,cosmo,entropy,report}``.

Exit codes: 0 success, 2 validation failure, 3 usage error, 4 budget exceeded.
Any option can also be set through an environment variable named
``POLYMER_<OPTION>`` (upper case, dashes as underscores); the command line wins.
"""

from __future__ import annotations

import argparse
import difflib
import math
import os
import sys
from pathlib import Path

import numpy as np

from polymer import __version__
from polymer.cosmo.evolve import SEED_LEVELS, WaveFunction, evolve, solution_basis
from polymer.cosmo.model import VACUUM, ModelError, load_model
from polymer.cosmo.preclassical import (
    NonUniqueMinimum,
    default_window,
    preclassicality_scan,
    select_preclassical_detail,
)
from polymer.cosmo.validate import validate_model
from polymer.entropy import (
    GAMMA_0,
    BudgetExceeded,
    CountingRule,
    HorizonEnsemble,
    count_states,
    entropy_slope_fit,
    r1_window,
    subleading_fit,
)
from polymer.output import csv_text, emit_report, fmt_real, format_count, load_meta, write_meta, write_text
from polymer.spectrum import crowding_check, enumerate_spectrum, gap_statistics, min_nonzero_area

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_USAGE = 3
EXIT_BUDGET = 4

VERDICT = {True: "PASS", False: "FAIL", None: "INFO"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with code 3 and suggests the closest valid option."""

    def _candidates(self) -> list[str]:
        found = []
        for action in self._actions:
            found.extend(s for s in action.option_strings if s.startswith("--"))
            if isinstance(action, argparse._SubParsersAction):
                found.extend(action.choices)
                for sub in action.choices.values():
                    found.extend(sub._candidates())
        return sorted(set(found))

    def error(self, message):
        hint = ""
        tokens = [t.strip("',") for t in message.replace(":", " ").split()]
        for tok in tokens:
            if tok.startswith("-") or "invalid choice" in message:
                close = difflib.get_close_matches(tok, self._candidates(), n=1, cutoff=0.6)
                if close and close[0] != tok:
                    hint = f" (did you mean {close[0]}?)"
                    break
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}{hint}\n")
        raise SystemExit(EXIT_USAGE)


def _split(text: str, n: int, kind, name: str):
    parts = str(text).split(":")
    if len(parts) != n:
        raise UsageError(f"{name} expects {n} ':'-separated values, got {text!r}")
    try:
        return tuple(k(p) for k, p in zip(kind, parts))
    except ValueError:
        raise UsageError(f"{name}: cannot parse {text!r}") from None


def _positive(value, name):
    if value is None or not (value > 0 and math.isfinite(value)):
        raise UsageError(f"{name} must be a positive number, got {value}")
    return value


# --- spectrum ----------------------------------------------------------------


def run_spectrum(args) -> int:
    gamma = _positive(args.gamma, "--gamma")
    cutoff = _positive(args.cutoff, "--cutoff")
    tol = _positive(args.tol, "--tol")
    lo, hi = _split(args.crowding_window, 2, (float, float), "--crowding-window")
    table = enumerate_spectrum(cutoff, gamma, max_twice_j=args.max_twice_j, tol=tol)
    vals = table.values
    gaps = np.append(np.diff(vals), np.nan)
    text = csv_text(
        ("index", "area", "gap"),
        ((i, fmt_real(a), fmt_real(g)) for i, (a, g) in enumerate(zip(vals, gaps))),
    )
    write_text(text, args.out)
    crowd = crowding_check(gap_statistics(table), gamma, lo, hi)
    detail = (
        f"{crowd.checked} gaps in [{lo:g}, {hi:g}], worst gap/exp(-sqrt(a)) = {crowd.worst_ratio:.3e}"
        + (f" at a = {crowd.worst_at:.6g}" if crowd.worst_at is not None else "")
        + f", {len(crowd.violations)} violations; {crowd.note}"
    )
    lowest = float(vals[1]) if len(vals) > 1 else None
    expected = min_nonzero_area(gamma).value
    checks = [
        {"name": "crowding", "passed": crowd.passed, "detail": detail},
        {
            "name": "lowest_nonzero",
            "passed": lowest is not None and abs(lowest - expected) <= 1e-12 * expected,
            "detail": f"{fmt_real(lowest)} vs 8 pi gamma sqrt(3)/2 = {fmt_real(expected)}",
        },
    ]
    params = {
        "gamma": gamma,
        "cutoff": cutoff,
        "tol": tol,
        "max_twice_j": table.max_twice_j,
        "crowding_window": args.crowding_window,
    }
    summary = {"eigenvalues": len(vals), "merged": table.merged}
    _finish(args, "spectrum", params, checks, summary)
    return EXIT_OK


# --- entropy -----------------------------------------------------------------


def _entropy_areas(args) -> list[float]:
    if (args.area is None) == (args.area_sweep is None):
        raise UsageError("give exactly one of --area or --area-sweep")
    if args.area is not None:
        areas = [args.area]
    else:
        lo, hi, steps = _split(args.area_sweep, 3, (float, float, int), "--area-sweep")
        if steps < 1 or lo <= 0 or hi < lo:
            raise UsageError("--area-sweep needs 0 < lo <= hi and steps >= 1")
        space = np.geomspace if args.spacing == "geometric" else np.linspace
        areas = [float(a) for a in space(lo, hi, steps)]
    for a in areas:
        _positive(a, "--area")
    return areas


def run_entropy(args) -> int:
    gamma = _positive(args.gamma, "--gamma")
    areas = _entropy_areas(args)
    try:
        rule = CountingRule(args.rule.upper(), j_max=args.j_max, projection_constraint=args.projection)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.snap and rule.rule_id != "R1":
        raise UsageError("--snap applies to rule r1 only")
    if args.delta is not None:
        _positive(args.delta, "--delta")

    quantum = min_nonzero_area(gamma).value
    rows, results, used = [], [], []
    for a in areas:
        try:
            if args.snap:
                n = max(1, round(a / quantum))
                ens = r1_window(gamma, n)
                if args.delta is not None:
                    ens = HorizonEnsemble(ens.a_hor, gamma, args.delta)
            else:
                ens = HorizonEnsemble(a, gamma, args.delta)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        try:
            res = count_states(
                ens, rule, args.method, bin_width=args.bin, ordered=not args.unordered,
                resolve_boundary=not args.no_resolve,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        results.append(res)
        used.append(ens.a_hor)
        S = res.entropy
        defined = [(x, r.entropy) for x, r in zip(used, results) if r.entropy is not None]
        slope = None
        if len({x for x, _ in defined}) >= 2:
            X = np.array([[x, 1.0] for x, _ in defined])
            y = np.array([s for _, s in defined])
            slope = float(np.linalg.lstsq(X, y, rcond=None)[0][0])
        rows.append(
            (
                fmt_real(ens.a_hor),
                res.digits if res.count else 0,
                fmt_real(S),
                fmt_real(slope),
                fmt_real(None if slope is None else 4.0 * slope * gamma),
                format_count(res.count),
            )
        )
    text = csv_text(("area", "count_digits", "entropy", "slope_running", "implied_gamma0", "count"), rows)
    write_text(text, args.out)

    checks, summary = [], {"samples": len(results), "exact_counts": all(r.exact for r in results)}
    straddling = [r.boundary_count / r.count for r in results if r.count and r.boundary_count]
    if straddling:
        summary["max_boundary_fraction"] = max(straddling)
    good = [(x, r) for x, r in zip(used, results) if r.count]
    if len(good) >= 10 and max(x for x, _ in good) / min(x for x, _ in good) >= 4:
        slope, implied = entropy_slope_fit([x for x, _ in good], [r for _, r in good])
        dev = (implied - GAMMA_0) / GAMMA_0
        summary.update(slope=slope, implied_gamma0=implied, deviation_from_ln2_over_sqrt3_pi=dev)
        checks.append(
            {
                "name": "implied_gamma0",
                "passed": abs(dev) <= 0.01 if rule.rule_id == "R1" else None,
                "detail": f"{implied:.10g} vs ln2/(sqrt3 pi) = {GAMMA_0:.10g}, relative deviation {dev:+.3e}",
            }
        )
        if max(x for x, _ in good) / min(x for x, _ in good) >= 10:
            fit = subleading_fit([x for x, _ in good], [r for _, r in good])
            summary.update(log_coefficient=fit.log_coefficient)
            checks.append(
                {
                    "name": "subleading_log",
                    "passed": None,
                    "detail": f"log coefficient {fit.log_coefficient:.6g}, residual {fit.fit_residual:.3e}"
                    f" vs constant model {fit.constant_residual:.3e}" + (f"; {fit.note}" if fit.note else ""),
                }
            )
    params = {
        "gamma": gamma,
        "rule": rule.label,
        "areas": args.area if args.area is not None else args.area_sweep,
        "spacing": args.spacing,
        "snap": args.snap,
        "delta": args.delta,
        "bin": args.bin,
        "method": args.method,
        "ordered": not args.unordered,
        "resolve_boundary": not args.no_resolve,
    }
    _finish(args, "entropy", params, checks, summary)
    return EXIT_OK


# --- cosmo -------------------------------------------------------------------


def _wave_rows(psi: WaveFunction):
    for i, n in enumerate(psi.levels):
        v = psi.values[i]
        undefined = np.isnan(v)
        yield (
            int(n),
            "" if undefined else fmt_real(v.real),
            "" if undefined else fmt_real(v.imag),
            fmt_real(psi.log_scale[n % 4]),
        )


def run_cosmo(args) -> int:
    try:
        model = load_model(args.model)
    except (ModelError, OSError) as exc:
        raise UsageError(f"cannot load model {args.model!r}: {exc}") from None
    lo, hi = (model.n_min, model.n_max) if args.range is None else _split(args.range, 2, (int, int), "--range")
    if lo < model.n_min or hi > model.n_max or hi - lo + 1 < SEED_LEVELS:
        raise UsageError(f"--range {lo}:{hi} must lie in [{model.n_min}, {model.n_max}] and span 16 levels")
    params = {"model": str(args.model), "range": f"{lo}:{hi}", "policy": args.policy}
    checks, summary = [], {}

    if args.validate:
        report = validate_model(model)
        print(report.format())
        checks.extend(
            {"name": c.name, "passed": c.passed, "detail": c.detail} for c in report.checks
        )
        if not report.passed:
            _finish(args, "cosmo", params, checks, summary, write=False, echo=False)
            return EXIT_VALIDATION
        if not args.select_preclassical and args.out is None:
            return EXIT_OK

    if args.select_preclassical:
        window = default_window(hi) if args.window is None else _split(args.window, 2, (int, int), "--window")
        params["window"] = f"{window[0]}:{window[1]}"
        basis = solution_basis(model, VACUUM, (lo, hi), policy=args.policy)
        try:
            sel = select_preclassical_detail(basis, window)
        except NonUniqueMinimum as exc:
            print(f"pre-classical selection failed: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        psi = sel.wavefunction
        scan = preclassicality_scan(psi)
        summary.update(
            basis_dimension=basis.dimension,
            window_measure=sel.measure,
            next_eigenvalue=float(sel.eigenvalues[1]) if len(sel.eigenvalues) > 1 else None,
            positive_measure=scan.positive_measure,
            negative_measure=scan.negative_measure,
        )
        if scan.note:
            summary["scan_note"] = scan.note
    else:
        top = {n: 1.0 for n in range(hi - SEED_LEVELS + 1, hi + 1) if n % 4 in model.residue_classes}
        seed = WaveFunction.from_levels(top, classes=model.residue_classes)
        psi = evolve(seed, model, VACUUM, from_n=hi, to_n=lo, policy=args.policy)
        summary["evolution"] = "constant seed on the top 16 levels, evolved backward"
        if psi.policy_log:
            summary["decoupled"] = "; ".join(psi.policy_log)

    write_text(csv_text(("n", "re_psi", "im_psi", "log_scale"), _wave_rows(psi)), args.out)
    _finish(args, "cosmo", params, checks, summary, echo=False)
    return EXIT_OK


# --- report ------------------------------------------------------------------


REPRODUCE_RUNS = (
    ("spectrum", ["spectrum", "--gamma", "1", "--cutoff", "300"], "spectrum.csv"),
    (
        "entropy",
        ["entropy", "--rule", "r1", "--gamma", "1", "--area-sweep", "100:2000:20", "--snap"],
        "entropy_r1.csv",
    ),
    ("cosmo", ["cosmo", "--model", "example", "--validate", "--select-preclassical"], "cosmo_example.csv"),
)


def run_report(args) -> int:
    metas = [load_meta(p) for p in args.meta]
    if args.reproduce is not None:
        directory = Path(args.reproduce)
        directory.mkdir(parents=True, exist_ok=True)
        for _, argv, name in REPRODUCE_RUNS:
            out = directory / name
            code = main(argv + ["--out", str(out)])
            if code not in (EXIT_OK, EXIT_VALIDATION):
                return code
            metas.append(load_meta(str(out) + ".meta.json"))
    target = args.out
    if target is None and args.reproduce is not None:
        target = str(Path(args.reproduce) / "report.txt")
    emit_report(metas, target)
    return EXIT_OK


# --- plumbing ----------------------------------------------------------------


def _finish(args, subcommand, params, checks, summary, write=True, echo=True):
    if echo:
        for c in checks:
            print(f"{VERDICT[c['passed']]} {c['name']}: {c['detail']}", file=sys.stderr)
    meta = {
        "subcommand": subcommand,
        "version": __version__,
        "parameters": params,
        "seed": args.seed,
        "threads": args.threads,
        "checks": checks,
        "summary": summary,
    }
    if write:
        write_meta(args.out, meta)


def _globals(parser, suppress: bool):
    default = argparse.SUPPRESS
    parser.add_argument("--out", default=default if suppress else None, help="output file (stdout if omitted)")
    parser.add_argument("--seed", type=int, default=default if suppress else 0,
                        help="seed for randomized instance generation (recorded)")
    parser.add_argument("--threads", type=int, default=default if suppress else 1,
                        help="worker threads (recorded; engines run single-threaded)")


def build_parser() -> Parser:
    parser = Parser(prog="polymer", description="Quantum-geometry numerics toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    sp = sub.add_parser("spectrum", help="enumerate the area spectrum")
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--cutoff", type=float, default=300.0)
    sp.add_argument("--tol", type=float, default=1e-9, help="merge eigenvalues closer than this")
    sp.add_argument("--max-twice-j", type=int, default=None)
    sp.add_argument("--crowding-window", default="100:inf", help="lo:hi window for the gap bound")
    _globals(sp, suppress=True)
    sp.set_defaults(func=run_spectrum)

    cp = sub.add_parser("cosmo", help="validate, evolve and select solutions of the difference equation")
    cp.add_argument("--model", default="example", help="model JSON file or shipped model name")
    cp.add_argument("--range", default=None, help="n_min:n_max (write --range=-40:40 for a negative start)")
    cp.add_argument("--select-preclassical", action="store_true")
    cp.add_argument("--window", default=None, help="lo:hi late-time window (default: top quarter of the range)")
    cp.add_argument("--validate", action="store_true")
    cp.add_argument("--policy", choices=("skip", "zero"), default="skip", help="decoupled-level policy")
    _globals(cp, suppress=True)
    cp.set_defaults(func=run_cosmo)

    ep = sub.add_parser("entropy", help="count horizon states")
    ep.add_argument("--gamma", type=float, default=GAMMA_0)
    ep.add_argument("--area", type=float, default=None)
    ep.add_argument("--area-sweep", default=None, help="lo:hi:steps")
    ep.add_argument("--spacing", choices=("linear", "geometric"), default="linear")
    ep.add_argument("--snap", action="store_true", help="r1: move each area to the nearest j=1/2 multiple")
    ep.add_argument("--delta", type=float, default=None)
    ep.add_argument("--rule", choices=("r1", "r2", "r3"), default="r1", type=str.lower)
    ep.add_argument("--projection", action="store_true", help="r3: require sum of m = 0")
    ep.add_argument("--j-max", type=int, default=None, help="cap on 2j")
    ep.add_argument("--bin", type=float, default=None, help="DP bin width (default delta/16)")
    ep.add_argument("--method", choices=("auto", "exact", "dp"), default="auto")
    ep.add_argument("--unordered", action="store_true", help="count unordered puncture sets")
    ep.add_argument("--no-resolve", action="store_true",
                    help="DP: keep the first bin width; counts include bins straddling the window edge")
    _globals(ep, suppress=True)
    ep.set_defaults(func=run_entropy)

    rp = sub.add_parser("report", help="summarize runs from their .meta.json files")
    rp.add_argument("meta", nargs="*", help="metadata sidecars")
    rp.add_argument("--reproduce", default=None, help="rerun the standard set into this directory first")
    _globals(rp, suppress=True)
    rp.set_defaults(func=run_report)
    return parser


_TRUE = {"1", "true", "yes", "on"}


def apply_environment(parser: argparse.ArgumentParser, environ=os.environ) -> None:
    """Use POLYMER_<DEST> variables as defaults for every option they name."""
    parsers = [parser]
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            parsers.extend(action.choices.values())
    for p in parsers:
        for action in p._actions:
            if not action.option_strings or action.default is argparse.SUPPRESS:
                continue
            key = "POLYMER_" + action.dest.upper()
            if key not in environ:
                continue
            raw = environ[key]
            if isinstance(action, argparse._StoreTrueAction):
                action.default = raw.strip().lower() in _TRUE
                continue
            try:
                action.default = action.type(raw) if action.type else raw
            except ValueError:
                raise UsageError(f"{key}={raw!r} is not a valid value") from None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        apply_environment(parser)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"polymer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, MemoryError) as exc:
        print(f"polymer: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    raise SystemExit(main())
