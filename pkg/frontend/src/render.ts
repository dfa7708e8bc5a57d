// DOM rendering. Pure functions from server responses to elements so the
// display can be asserted against the wire values in tests.

import type { ReportDoc, WhatifResponse } from "./api.js";
import { fmt4, fmtPct, fmtSigned4 } from "./format.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Live metrics table plus signed gap bars against the dominant subgroup. */
export function renderMetricsPanel(response: WhatifResponse): HTMLElement {
  const panel = el("div", "metrics-panel");
  const table = el("table", "metrics-table");
  const head = el("tr");
  for (const title of ["subgroup", "threshold", response.utility, "gap vs dominant"]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);

  const gaps = Object.values(response.discrimination).filter(
    (v): v is number => v !== null,
  );
  const maxGap = Math.max(0.0001, ...gaps.map((v) => Math.abs(v)));

  for (const subgroup of Object.keys(response.per_subgroup).sort()) {
    const metrics = response.per_subgroup[subgroup];
    const row = el("tr");
    row.dataset.subgroup = subgroup;

    const name = el("td", "subgroup-name", subgroup);
    if (subgroup === response.dominant) {
      name.classList.add("dominant");
      name.appendChild(el("span", "dominant-marker", " ★"));
    }
    row.appendChild(name);
    row.appendChild(el("td", "threshold-cell", fmt4(metrics.threshold)));

    const utilityCell = el("td", "utility-cell");
    if (metrics.utility === null) {
      utilityCell.appendChild(el("span", "undefined-badge", "undefined"));
    } else {
      utilityCell.textContent = fmt4(metrics.utility);
    }
    row.appendChild(utilityCell);

    const gapCell = el("td", "gap-cell");
    if (subgroup === response.dominant) {
      gapCell.textContent = "—";
    } else {
      const gap = response.discrimination[subgroup] ?? null;
      if (gap === null) {
        gapCell.appendChild(el("span", "undefined-badge", "undefined"));
      } else {
        const bar = el("div", gap >= 0 ? "gap-bar positive" : "gap-bar negative");
        bar.style.width = `${Math.round((Math.abs(gap) / maxGap) * 100)}%`;
        gapCell.appendChild(bar);
        gapCell.appendChild(el("span", "gap-value", fmtSigned4(gap)));
      }
    }
    row.appendChild(gapCell);
    table.appendChild(row);
  }

  const overall = el("tr", "overall-row");
  overall.appendChild(el("td", undefined, "overall"));
  overall.appendChild(el("td"));
  overall.appendChild(
    el("td", "utility-cell overall-utility", fmt4(response.overall.utility)),
  );
  overall.appendChild(el("td"));
  table.appendChild(overall);

  panel.appendChild(table);
  return panel;
}

/** Before/after comparison for an optimization run, shaped like the report
 * table: Baseline row, adjusted thresholds, net and percent differences. */
export function renderReportComparison(report: ReportDoc): HTMLElement {
  const panel = el("div", "report-panel");
  const subgroups = Object.keys(report.baseline.per_subgroup).sort();

  const summary = el(
    "p",
    "report-summary",
    `dominant ${report.dominant} · mode ${report.mode} · feasible ${report.validation.feasible}`,
  );
  panel.appendChild(summary);

  const table = el("table", "report-table");
  const head = el("tr");
  for (const title of ["", "tau", "overall", ...subgroups]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);

  const baseline = el("tr", "baseline-row");
  baseline.appendChild(el("td", undefined, "Baseline"));
  baseline.appendChild(el("td", undefined, fmt4(report.tau_base)));
  baseline.appendChild(el("td", "baseline-overall", fmt4(report.baseline.overall)));
  for (const g of subgroups) {
    baseline.appendChild(
      el("td", `baseline-${g}`, fmt4(report.baseline.per_subgroup[g])),
    );
  }
  table.appendChild(baseline);

  const adjusted = el("tr", "adjusted-row");
  adjusted.appendChild(el("td", undefined, "Adjusted"));
  adjusted.appendChild(el("td"));
  adjusted.appendChild(el("td", "adjusted-overall", fmt4(report.adjusted.overall)));
  for (const g of subgroups) {
    adjusted.appendChild(
      el("td", `adjusted-${g}`, fmt4(report.adjusted.per_subgroup[g])),
    );
  }
  table.appendChild(adjusted);

  const thresholds = el("tr", "thresholds-row");
  thresholds.appendChild(el("td", undefined, "tau_adj"));
  thresholds.appendChild(el("td"));
  thresholds.appendChild(el("td"));
  for (const g of subgroups) {
    thresholds.appendChild(
      el("td", `tau-${g}`, fmt4(report.thresholds.per_subgroup[g])),
    );
  }
  table.appendChild(thresholds);

  const net = el("tr", "net-row");
  net.appendChild(el("td", undefined, "Net Diff."));
  net.appendChild(el("td"));
  net.appendChild(el("td", undefined, fmtSigned4(report.diffs.overall.net_diff)));
  for (const g of subgroups) {
    net.appendChild(el("td", undefined, fmtSigned4(report.diffs.per_subgroup[g].net_diff)));
  }
  table.appendChild(net);

  const pct = el("tr", "pct-row");
  pct.appendChild(el("td", undefined, "% Diff."));
  pct.appendChild(el("td"));
  pct.appendChild(el("td", undefined, fmtPct(report.diffs.overall.pct_diff)));
  for (const g of subgroups) {
    pct.appendChild(el("td", undefined, fmtPct(report.diffs.per_subgroup[g].pct_diff)));
  }
  table.appendChild(pct);
  panel.appendChild(table);

  const gaps = el("ul", "gap-list");
  for (const g of Object.keys(report.discrimination).sort()) {
    const entry = report.discrimination[g];
    gaps.appendChild(
      el(
        "li",
        `gap-${g}`,
        `${g}: ${fmt4(entry.before)} → ${fmt4(entry.after)} (${fmtPct(entry.pct_diff)})`,
      ),
    );
  }
  panel.appendChild(gaps);
  panel.appendChild(el("p", "report-footnote", report.footnote));
  return panel;
}

/** Error banner; the caller leaves the previous panel contents in place. */
export function renderBanner(message: string, onRetry?: () => void): HTMLElement {
  const banner = el("div", "banner error", message);
  if (onRetry) {
    const button = el("button", "retry-button", "retry");
    button.addEventListener("click", onRetry);
    banner.appendChild(button);
  }
  return banner;
}
