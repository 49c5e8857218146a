"""CSV, metadata sidecars and run reports.

Everything written here is a pure function of the run parameters: no
timestamps, no host names, sorted keys, LF line endings.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Sequence

from polymer.entropy.ensemble import decimal_digits

LARGE_COUNT_DIGITS = 10**6
LEADING_DIGITS = 20


def fmt_real(x) -> str:
    """17 significant digits; empty for missing values."""
    if x is None:
        return ""
    x = float(x) + 0.0  # no negative zero
    if math.isnan(x):
        return ""
    return "%.17g" % x


@contextmanager
def _unlimited_int_str():
    get = getattr(sys, "get_int_max_str_digits", None)
    if get is None:
        yield
        return
    old = get()
    sys.set_int_max_str_digits(0)
    try:
        yield
    finally:
        sys.set_int_max_str_digits(old)


def format_count(n: int) -> str:
    """Full decimal count, or its leading 20 digits followed by '...' beyond 10^6 digits."""
    digits = decimal_digits(n)
    if digits <= LARGE_COUNT_DIGITS:
        with _unlimited_int_str():
            return str(n)
    lead = n // 10 ** (digits - LEADING_DIGITS)
    return f"{lead}..."


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_text(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def sha256_file(path) -> str | None:
    path = Path(path)
    if not path.is_file():
        return None
    return hashlib.sha256(path.read_bytes()).hexdigest()


def meta_path(out) -> Path:
    return Path(str(out) + ".meta.json")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"


def write_meta(out, meta: dict) -> Path | None:
    """Write ``<out>.meta.json`` next to a CSV; nothing when writing to stdout."""
    if out is None or str(out) == "-":
        return None
    meta = dict(meta)
    meta["outputs"] = {str(out): sha256_file(out)}
    path = meta_path(out)
    write_text(dump_json(meta), path)
    return path


def load_meta(path) -> dict:
    return json.loads(Path(path).read_text())


def _verdict(passed) -> str:
    return {True: "PASS", False: "FAIL", None: "INFO"}.get(passed, "INFO")


def emit_report(results: Sequence[dict], path=None) -> str:
    """Plain-text summary of engine runs: parameters, check verdicts, file digests."""
    lines = ["polymer run report", ""]
    if not results:
        lines.append("no engines run")
        text = "\n".join(lines) + "\n"
        write_text(text, path)
        return text
    manifest = {}
    for meta in results:
        lines.append(f"[{meta.get('subcommand', '?')}]")
        lines.append("parameters:")
        for key, value in sorted(meta.get("parameters", {}).items()):
            lines.append(f"  {key} = {value}")
        checks = meta.get("checks", [])
        if checks:
            lines.append("checks:")
            for c in checks:
                lines.append(f"  {_verdict(c.get('passed'))} {c['name']}: {c.get('detail', '')}")
        summary = meta.get("summary", {})
        if summary:
            lines.append("summary:")
            for key, value in sorted(summary.items()):
                lines.append(f"  {key} = {value}")
        lines.append("")
        for out in meta.get("outputs", {}):
            manifest[out] = sha256_file(out)
    lines.append("manifest (sha256):")
    for out, digest in sorted(manifest.items()):
        lines.append(f"  {digest or 'missing'}  {out}")
    text = "\n".join(lines) + "\n"
    write_text(text, path)
    return text
