"""Check reports: a human table and a JSON-lines record stream.

Everything except the trailing timing block is deterministic, so two runs
of the same scenario produce byte-identical comparable sections.  Numbers
are written with 17 significant digits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

__all__ = [
    "CheckResult",
    "Report",
    "observed_orders",
    "render_table",
    "render_records",
    "comparable_section",
    "TIMING_MARKER",
]

TIMING_MARKER = "# timing (not comparable)"


def fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


@dataclass
class CheckResult:
    name: str
    inf: float
    l2: float | None
    tol: float
    passed: bool
    orders: list | None = None
    note: str = ""


@dataclass
class Report:
    scenario: dict
    checks: list = field(default_factory=list)
    columns: dict = field(default_factory=dict)
    elapsed: float = 0.0
    trace: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def observed_orders(values, ratio: float = 2.0) -> list:
    """``log_ratio(v_k / v_{k+1})`` for successive levels; ``"exact"`` when both are zero."""
    out = []
    for a, b in zip(values[:-1], values[1:]):
        if a == 0.0 and b == 0.0:
            out.append("exact")
        elif b == 0.0:
            out.append(math.inf)
        elif a == 0.0:
            out.append(-math.inf)
        else:
            out.append(math.log(a / b) / math.log(ratio))
    return out


def _order_text(orders) -> str:
    if orders is None:
        return "-"
    return ",".join(o if isinstance(o, str) else fmt(float(o)) for o in orders)


def render_table(report: Report) -> str:
    lines = []
    for k, v in report.scenario.items():
        if isinstance(v, list):
            v = " ".join(fmt(x) for x in v)
        lines.append(f"{k}: {fmt(v)}")
    lines.append("")
    header = ("check", "inf", "l2", "tol", "orders", "result")
    rows = [
        (
            c.name,
            fmt(c.inf),
            fmt(c.l2),
            fmt(c.tol),
            _order_text(c.orders),
            ("PASS" if c.passed else "FAIL") + (f" ({c.note})" if c.note else ""),
        )
        for c in report.checks
    ]
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip())
    for r in rows:
        lines.append("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip())
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    if report.trace:
        lines.append("")
        lines.append("# newton trace")
        keys = list(report.trace[0])
        lines.append(" ".join(keys))
        for entry in report.trace:
            lines.append(" ".join(fmt(entry[k]) for k in keys))
    if report.columns:
        lines.append("")
        lines.append("# columns")
        names = list(report.columns)
        lines.append(" ".join(names))
        n = len(report.columns[names[0]])
        for i in range(n):
            lines.append(" ".join(fmt(report.columns[c][i]) for c in names))
    lines.append("")
    lines.append(TIMING_MARKER)
    lines.append(f"elapsed_s: {report.elapsed:.3f}")
    return "\n".join(lines) + "\n"


def _json(value) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become strings."""
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return fmt(value) if math.isfinite(value) else json.dumps(fmt(value))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_json(v) for v in value) + "]"
    return _json(float(value))


def render_records(report: Report) -> str:
    out = [_json({"record": "scenario", **report.scenario})]
    for c in report.checks:
        rec = {"record": "check", "name": c.name, "inf": c.inf, "l2": c.l2, "tol": c.tol, "pass": c.passed}
        if c.orders is not None:
            rec["orders"] = list(c.orders)
        if c.note:
            rec["note"] = c.note
        out.append(_json(rec))
    for entry in report.trace:
        out.append(_json({"record": "trace", **entry}))
    if report.columns:
        names = list(report.columns)
        for i in range(len(report.columns[names[0]])):
            out.append(_json({"record": "row", **{n: report.columns[n][i] for n in names}}))
    out.append(_json({"record": "summary", "pass": report.passed}))
    out.append(_json({"record": "timing", "comparable": False, "elapsed_s": round(report.elapsed, 3)}))
    return "\n".join(out) + "\n"


def comparable_section(text: str) -> str:
    """Strip the non-deterministic timing part of a rendered report."""
    keep = []
    for line in text.splitlines(keepends=True):
        if line.startswith(TIMING_MARKER) or '"record": "timing"' in line:
            break
        keep.append(line)
    return "".join(keep)
