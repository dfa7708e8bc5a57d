import { describe, expect, it } from "vitest";

import type { ReportDoc, WhatifResponse } from "../src/api.js";
import {
  applyReport,
  applyWhatif,
  initialState,
  issueRequest,
  onPartition,
  setBaseline,
  setSlider,
} from "../src/state.js";

import reportFixture from "./fixtures/report.json";

function whatifAt(version: number, marker: number): WhatifResponse {
  return {
    version,
    utility: "ppv",
    per_subgroup: {
      A: {
        threshold: marker,
        size: 10,
        utility: marker,
        counts: { tp: 1, fp: 1, tn: 1, fn: 1 },
      },
    },
    overall: { utility: marker, counts: { tp: 1, fp: 1, tn: 1, fn: 1 } },
    dominant: "A",
    discrimination: {},
  };
}

describe("dashboard state", () => {
  it("keeps sliders inside [0, 1]", () => {
    const state = initialState();
    onPartition(state, { A: 5, B: 5 }, 1);
    setSlider(state, "A", 1.7);
    setSlider(state, "B", -0.2);
    expect(state.sliders).toEqual({ A: 1, B: 0 });
  });

  it("baseline change moves every slider", () => {
    const state = initialState();
    onPartition(state, { A: 5, B: 5 }, 1);
    setBaseline(state, 0.65);
    expect(state.sliders).toEqual({ A: 0.65, B: 0.65 });
  });

  it("discards out-of-order responses", () => {
    const state = initialState();
    onPartition(state, { A: 5 }, 1);
    const first = issueRequest(state);
    const second = issueRequest(state);
    expect(applyWhatif(state, second, whatifAt(1, 0.9))).toBe(true);
    // the older response arrives late and must not overwrite the newer one
    expect(applyWhatif(state, first, whatifAt(1, 0.1))).toBe(false);
    expect(state.whatif?.overall.utility).toBe(0.9);
    expect(state.pending).toBe(false);
  });

  it("discards responses from a stale partition version", () => {
    const state = initialState();
    onPartition(state, { A: 5 }, 2);
    const seq = issueRequest(state);
    expect(applyWhatif(state, seq, whatifAt(1, 0.4))).toBe(false);
    expect(state.whatif).toBeNull();
  });

  it("new partition resets the request bookkeeping", () => {
    const state = initialState();
    onPartition(state, { A: 5 }, 1);
    const seq = issueRequest(state);
    applyWhatif(state, seq, whatifAt(1, 0.5));
    onPartition(state, { A: 3, B: 2 }, 2);
    expect(state.whatif).toBeNull();
    expect(state.lastIssuedSeq).toBe(0);
    expect(Object.keys(state.sliders).sort()).toEqual(["A", "B"]);
  });

  it("applyReport snaps the sliders to the returned thresholds", () => {
    const state = initialState();
    const report = reportFixture as ReportDoc;
    const subgroups: Record<string, number> = {};
    for (const g of Object.keys(report.subgroup_sizes)) {
      subgroups[g] = report.subgroup_sizes[g];
    }
    onPartition(state, subgroups, 2);
    applyReport(state, report);
    expect(state.sliders).toEqual(report.thresholds.per_subgroup);
    expect(state.report).toBe(report);
  });
});
