"""Report emission: aligned text tables, CSV, JSON and grouped-bar SVG.

All renderers are pure string builders, so identical inputs give
byte-identical documents.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Any, Sequence

from .exceptions import ValidationError
from .scenario import ScenarioResult

FORMATS = ("table", "csv", "json", "svg-bars")


def round_half_up(x: float, places: int = 3) -> str:
    """Display rounding; ``0.8725`` becomes ``"0.873"``."""
    # The 12-digit detour strips binary noise such as 0.8724999999999999.
    q = Decimal(f"{x:.12f}").quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    if q == 0:
        q = abs(q)
    return f"{q:.{places}f}"


def full(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class Section:
    """One flat table. Cells hold str, int, float, bool or None."""

    title: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Any, ...], ...]
    notes: tuple[str, ...] = field(default_factory=tuple)


def _cell_text(value: Any, for_table: bool) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return round_half_up(value, 6) if for_table else full(value)
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    return value


def _render_table(sections: Sequence[Section]) -> str:
    blocks = []
    for sec in sections:
        lines = [sec.title, "=" * len(sec.title)] if sec.title else []
        lines.extend(sec.notes)
        cells = [[_cell_text(v, True) for v in row] for row in sec.rows]
        widths = [max([len(c)] + [len(r[j]) for r in cells]) for j, c in enumerate(sec.columns)]
        lines.append("  ".join(c.ljust(w) for c, w in zip(sec.columns, widths)).rstrip())
        lines.append("  ".join("-" * w for w in widths))
        for row in cells:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _render_csv(sections: Sequence[Section]) -> str:
    # Several sections share one header only when their columns agree;
    # otherwise a leading "section" column keeps the document rectangular.
    buf = io.StringIO()
    writer = csv.writer(buf)
    if not sections:
        return ""
    same = all(s.columns == sections[0].columns for s in sections)
    if same and len(sections) == 1:
        writer.writerow(sections[0].columns)
        for row in sections[0].rows:
            writer.writerow([_cell_text(v, False) for v in row])
        return buf.getvalue()
    columns: list[str] = []
    for sec in sections:
        for c in sec.columns:
            if c not in columns:
                columns.append(c)
    writer.writerow(["section", *columns])
    for sec in sections:
        for row in sec.rows:
            by_name = dict(zip(sec.columns, row))
            writer.writerow([sec.title] + [_cell_text(by_name.get(c), False) for c in columns])
    return buf.getvalue()


def _render_json(sections: Sequence[Section], meta: dict | None) -> str:
    doc = {
        "meta": meta or {},
        "sections": [
            {"title": s.title, "notes": list(s.notes), "columns": list(s.columns),
             "rows": [{c: _json_value(v) for c, v in zip(s.columns, row)} for row in s.rows]}
            for s in sections
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def render_sections(sections: Sequence[Section], fmt: str, meta: dict | None = None) -> str:
    if fmt == "table":
        return _render_table(sections)
    if fmt == "csv":
        return _render_csv(sections)
    if fmt == "json":
        return _render_json(sections, meta)
    if fmt == "svg-bars":
        raise ValidationError("svg-bars is only available for scenario evaluations", "format")
    raise ValidationError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}", "format")


# -- scenario results --------------------------------------------------------

OUTCOME_ROWS = (
    ("technical_quality", "Q", "Technical quality of the delivered system"),
    ("documentation_quality", "D", "Quality of reports and documentation"),
    ("timeliness", "T", "On-time delivery of milestones"),
    ("alignment", "A", "Fit with the sponsor's business needs"),
    ("publishability", "P", "Academic publication potential"),
)
UTILITY_ROWS = (
    ("university", "U_U", "University payoff"),
    ("sponsor", "U_C", "Sponsor payoff"),
    ("students", "U_S", "Student team payoff"),
)
RESULT_COLUMNS = ("scenario", "table", "name", "symbol", "value", "value_full", "interpretation", "note")


def result_rows(result: ScenarioResult) -> list[tuple]:
    rows = []
    for (name, sym, text), v in zip(OUTCOME_ROWS, result.outcomes.as_tuple()):
        note = "" if 0.0 <= v <= 1.0 else "outside [0, 1]"
        rows.append((result.name, "outcomes", name, sym, round_half_up(v), full(v), text, note))
    for (name, sym, text), v in zip(UTILITY_ROWS, result.utilities.as_tuple()):
        rows.append((result.name, "utilities", name, sym, round_half_up(v), full(v), text, ""))
    label = result.regime
    rows.append((result.name, "regime", "regime", "", label.value.value, label.value.value,
                 "; ".join(label.rule_trace) or "no rule fired", ""))
    return rows


def _result_sections(results: Sequence[ScenarioResult]) -> list[Section]:
    if not results:
        return [Section("", RESULT_COLUMNS, ())]
    rows = tuple(r for res in results for r in result_rows(res))
    return [Section("", RESULT_COLUMNS, rows)]


def _profile_text(result: ScenarioResult) -> str:
    a = result.actions
    return (f"r={a.university.rubric:g} i={a.university.ip_policy.value} m={a.university.requirement}; "
            f"s={a.sponsor.posture.value} o={a.sponsor.mentoring} d={a.sponsor.scope:g}; "
            f"e={a.student.effort:g} x={a.student.orientation.value}; "
            f"theta_U={result.types.university.value} theta_C={result.types.sponsor:g} "
            f"theta_S={result.types.student.label.value}")


def _results_table(results: Sequence[ScenarioResult]) -> str:
    if not results:
        return _render_table([Section("", ("name", "symbol", "value", "value_full", "interpretation"), ())])
    sections = []
    for res in results:
        rows = [r[2:8] for r in result_rows(res) if r[1] != "regime"]
        label = res.regime
        notes = (f"actions: {_profile_text(res)}",
                 f"regime: {label.value.value} ({'; '.join(label.rule_trace) or 'no rule fired'})")
        if not res.outcomes.in_unit_interval:
            notes += ("warning: at least one outcome lies outside [0, 1]",)
        sections.append(Section(res.name, ("name", "symbol", "value", "value_full", "interpretation", "note"),
                                tuple(rows), notes))
    if len(results) > 1:
        names = [res.name for res in results]
        cross = []
        for j, (name, sym, _) in enumerate(OUTCOME_ROWS):
            cross.append((name, sym, *(round_half_up(res.outcomes.as_tuple()[j]) for res in results)))
        for j, (name, sym, _) in enumerate(UTILITY_ROWS):
            cross.append((name, sym, *(round_half_up(res.utilities.as_tuple()[j]) for res in results)))
        cross.append(("regime", "", *(res.regime.value.value for res in results)))
        sections.append(Section("cross-case summary", ("name", "symbol", *names), tuple(cross)))
    return _render_table(sections)


def _results_json(results: Sequence[ScenarioResult]) -> str:
    doc = []
    for res in results:
        doc.append({
            "scenario": res.name,
            "actions": _profile_text(res),
            "outcomes": {name: {"symbol": sym, "value": round_half_up(v), "value_full": v}
                         for (name, sym, _), v in zip(OUTCOME_ROWS, res.outcomes.as_tuple())},
            "utilities": {name: {"symbol": sym, "value": round_half_up(v), "value_full": v}
                          for (name, sym, _), v in zip(UTILITY_ROWS, res.utilities.as_tuple())},
            "outcomes_in_unit_interval": res.outcomes.in_unit_interval,
            "regime": {"value": res.regime.value.value, "rule_trace": list(res.regime.rule_trace)},
        })
    return json.dumps({"scenarios": doc}, indent=2) + "\n"


# -- grouped bars ------------------------------------------------------------

BAR_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c")
BAR_LABELS = ("U_U", "U_C", "U_S")


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def svg_bars(results: Sequence[ScenarioResult], title: str = "Stakeholder utilities by scenario") -> str:
    """Grouped bars of (U_U, U_C, U_S) per scenario; bar height is proportional to the value."""
    left, right, top, bottom = 60.0, 20.0, 50.0, 60.0
    group_w, bar_w, gap = 150.0, 36.0, 6.0
    plot_h = 300.0
    width = left + right + max(1, len(results)) * group_w
    height = top + plot_h + bottom
    # utilities come in U_U, U_C, U_S order
    values = [(r.utilities.university, r.utilities.sponsor, r.utilities.students) for r in results]
    flat = [v for triple in values for v in triple]
    hi = max([1.0] + flat)
    lo = min([0.0] + flat)
    scale = plot_h / (hi - lo)
    zero_y = top + hi * scale

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.1f}" height="{height:.1f}" '
        f'viewBox="0 0 {width:.1f} {height:.1f}">',
        f'<title>{_esc(title)}</title>',
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{_esc(title)}</text>',
    ]
    for k in range(6):
        v = lo + (hi - lo) * k / 5
        y = zero_y - v * scale
        out.append(f'<line x1="{left:.1f}" y1="{y:.2f}" x2="{width - right:.1f}" y2="{y:.2f}" '
                   f'stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{left - 6:.1f}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{round_half_up(v, 2)}</text>')
    for g, (res, triple) in enumerate(zip(results, values)):
        x0 = left + g * group_w + (group_w - 3 * bar_w - 2 * gap) / 2
        for j, v in enumerate(triple):
            x = x0 + j * (bar_w + gap)
            h = abs(v) * scale
            y = zero_y - v * scale if v >= 0 else zero_y
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" height="{h:.2f}" '
                       f'fill="{BAR_COLORS[j]}"><title>{_esc(res.name)} {BAR_LABELS[j]} = '
                       f'{full(v)}</title></rect>')
            out.append(f'<text x="{x + bar_w / 2:.2f}" y="{(zero_y - max(v, 0.0) * scale) - 4:.2f}" '
                       f'text-anchor="middle" font-family="sans-serif" font-size="10">'
                       f'{round_half_up(v)}</text>')
        cx = left + g * group_w + group_w / 2
        out.append(f'<text x="{cx:.2f}" y="{top + plot_h + 20:.2f}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{_esc(res.name)}</text>')
        out.append(f'<text x="{cx:.2f}" y="{top + plot_h + 36:.2f}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="10">{_esc(res.regime.value.value)}</text>')
    out.append(f'<line x1="{left:.1f}" y1="{zero_y:.2f}" x2="{width - right:.1f}" y2="{zero_y:.2f}" '
               f'stroke="#000000" stroke-width="1"/>')
    lx = left
    for j, label in enumerate(BAR_LABELS):
        out.append(f'<rect x="{lx:.1f}" y="{height - 16:.1f}" width="10" height="10" fill="{BAR_COLORS[j]}"/>')
        out.append(f'<text x="{lx + 14:.1f}" y="{height - 7:.1f}" font-family="sans-serif" '
                   f'font-size="11">{label}</text>')
        lx += 60
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(results: Sequence[ScenarioResult], fmt: str = "table") -> str:
    """Render evaluated scenarios. An empty list gives a header-only document."""
    results = list(results)
    if fmt == "table":
        return _results_table(results)
    if fmt == "csv":
        return _render_csv(_result_sections(results))
    if fmt == "json":
        return _results_json(results)
    if fmt == "svg-bars":
        return svg_bars(results)
    raise ValidationError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}", "format")
