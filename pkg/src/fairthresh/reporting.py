"""Stable serialization and table rendering for optimization reports."""

from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema

from . import schemas
from .errors import DatasetError, FairthreshError
from .optimizer import OptimizationReport, net_diff, pct_diff

REPORT_FOOTNOTE = (
    "Percent differences are the net change divided by the baseline value of "
    "the same quantity."
)


def report_to_doc(report: OptimizationReport) -> dict:
    """Plain-dict form of a report, refusing undefined utility values."""
    _require_finite(report.baseline_overall, "baseline overall utility")
    _require_finite(report.adjusted_overall, "adjusted overall utility")
    for label, mapping in (
        ("baseline", report.baseline_per_subgroup),
        ("adjusted", report.adjusted_per_subgroup),
    ):
        for subgroup, value in mapping.items():
            _require_finite(value, f"{label} utility of subgroup {subgroup!r}")

    grid = report.grid
    if grid.kind == "uniform":
        grid_doc: dict = {"type": "uniform", "step": grid.step}
    elif grid.kind == "explicit":
        grid_doc = {"type": "explicit", "values": list(grid.values)}
    else:
        grid_doc = {"type": "observed_scores"}

    subgroups = sorted(report.baseline_per_subgroup)
    discrimination = {}
    for g in sorted(report.discrimination_before):
        before = report.discrimination_before[g]
        after = report.discrimination_after[g]
        discrimination[g] = {
            "before": before,
            "after": after,
            "net_diff": net_diff(before, after),
            "pct_diff": pct_diff(before, after),
        }
    return {
        "schema_version": schemas.REPORT_SCHEMA_VERSION,
        "utility": report.utility.value,
        "mode": report.mode.value,
        "aggregate_objective": report.aggregate_objective.value,
        "tau_base": report.tau_base,
        "grid": grid_doc,
        "dominant": report.dominant,
        "dominant_tie_broken": report.dominant_tie_broken,
        "subgroup_sizes": {g: report.subgroup_sizes[g] for g in subgroups},
        "baseline": {
            "overall": report.baseline_overall,
            "per_subgroup": {g: report.baseline_per_subgroup[g] for g in subgroups},
        },
        "adjusted": {
            "overall": report.adjusted_overall,
            "per_subgroup": {g: report.adjusted_per_subgroup[g] for g in subgroups},
        },
        "thresholds": {
            "tau_base": report.assignment.tau_base,
            "per_subgroup": {
                g: report.assignment.per_subgroup[g] for g in subgroups
            },
        },
        "discrimination": discrimination,
        "diffs": {
            "overall": _diff_doc(report.baseline_overall, report.adjusted_overall),
            "per_subgroup": {
                g: _diff_doc(
                    report.baseline_per_subgroup[g], report.adjusted_per_subgroup[g]
                )
                for g in subgroups
            },
        },
        "validation": {
            "feasible": report.validation.feasible,
            "checks": [
                {
                    "name": c.name,
                    "subgroup": c.subgroup,
                    "passed": c.passed,
                    "detail": c.detail,
                }
                for c in report.validation.checks
            ],
        },
        "footnote": REPORT_FOOTNOTE,
    }


def _diff_doc(baseline: float, adjusted: float) -> dict:
    return {
        "net_diff": net_diff(baseline, adjusted),
        "pct_diff": pct_diff(baseline, adjusted),
    }


def _require_finite(value: float, what: str) -> None:
    if value is None or not math.isfinite(value):
        raise FairthreshError(
            f"cannot serialize report: {what} is undefined; "
            "rerun with a feasible baseline threshold or different subgrouping"
        )


def serialize_report(report: OptimizationReport) -> bytes:
    """Canonical JSON bytes: sorted keys, full float precision, newline end.

    The same bytes come out of the CLI and the HTTP service, and the encoding
    round-trips floats exactly.
    """
    doc = report_to_doc(report)
    return (json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n").encode(
        "utf-8"
    )


def write_report(report: OptimizationReport, path: str | Path, format: str = "json") -> None:
    path = Path(path)
    if format == "json":
        path.write_bytes(serialize_report(report))
    elif format == "table":
        path.write_text(render_table(report), encoding="utf-8")
    else:
        raise FairthreshError(f"unknown report format {format!r}")


def read_report(path: str | Path) -> dict:
    """Load a report document, rejecting unknown schema major versions."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    version = doc.get("schema_version", "")
    major = version.split(".", 1)[0]
    expected_major = schemas.REPORT_SCHEMA_VERSION.split(".", 1)[0]
    if major != expected_major:
        raise DatasetError(
            f"unsupported report schema version {version!r}; "
            f"this reader handles major version {expected_major}"
        )
    jsonschema.validate(doc, schemas.REPORT_SCHEMA)
    return doc


def _fmt(value: float | None, signed: bool = False) -> str:
    if value is None:
        return "n/a"
    return f"{value:+.4f}" if signed else f"{value:.4f}"


def _fmt_pct(value: float | None) -> str:
    if value is None:
        return "n/a"
    return f"{value * 100:+.1f}%"


def render_table(report: OptimizationReport) -> str:
    """Text table with Baseline, per-subgroup tau_adj, Net Diff. and % Diff.
    rows; utilities rounded to 4 decimals. The dominant subgroup's column is
    starred."""
    subgroups = sorted(report.baseline_per_subgroup)
    dominant = report.dominant

    header = ["", "tau", "overall"]
    header += [g + ("*" if g == dominant else "") for g in subgroups]
    header += ["D_before", "D_after", "D_net", "D_pct"]

    rows: list[list[str]] = [header]
    rows.append(
        ["Baseline", _fmt(report.tau_base), _fmt(report.baseline_overall)]
        + [_fmt(report.baseline_per_subgroup[g]) for g in subgroups]
        + ["", "", "", ""]
    )
    for g in subgroups:
        if g == dominant and report.assignment.per_subgroup[g] == report.tau_base:
            continue
        tau = report.assignment.per_subgroup[g]
        cells = [f"tau_adj,{g}", _fmt(tau), ""]
        cells += [_fmt(report.adjusted_per_subgroup[g]) if h == g else "" for h in subgroups]
        if g in report.discrimination_before:
            before = report.discrimination_before[g]
            after = report.discrimination_after[g]
            cells += [
                _fmt(before),
                _fmt(after),
                _fmt(net_diff(before, after), signed=True),
                _fmt_pct(pct_diff(before, after)),
            ]
        else:
            cells += ["-", "-", "-", "-"]
        rows.append(cells)
    rows.append(
        ["Adjusted", "", _fmt(report.adjusted_overall)]
        + [_fmt(report.adjusted_per_subgroup[g]) for g in subgroups]
        + ["", "", "", ""]
    )
    rows.append(
        ["Net Diff.", "", _fmt(net_diff(report.baseline_overall, report.adjusted_overall), signed=True)]
        + [
            _fmt(
                net_diff(
                    report.baseline_per_subgroup[g], report.adjusted_per_subgroup[g]
                ),
                signed=True,
            )
            for g in subgroups
        ]
        + ["", "", "", ""]
    )
    rows.append(
        ["% Diff.", "", _fmt_pct(pct_diff(report.baseline_overall, report.adjusted_overall))]
        + [
            _fmt_pct(
                pct_diff(
                    report.baseline_per_subgroup[g], report.adjusted_per_subgroup[g]
                )
            )
            for g in subgroups
        ]
        + ["", "", "", ""]
    )

    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    title = (
        f"utility={report.utility.value}  mode={report.mode.value}  "
        f"dominant={dominant}  feasible={report.validation.feasible}"
    )
    return "\n".join([title, *lines, "", REPORT_FOOTNOTE]) + "\n"
