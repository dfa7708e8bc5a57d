// Dashboard state with monotone response ordering: every issued what-if
// request gets a sequence number, and a response is applied only if it is
// newer than the last applied one AND still matches the session's partition
// version. Out-of-order and stale responses are discarded.

import type { ReportDoc, WhatifResponse } from "./api.js";

export interface DashboardState {
  session: string | null;
  sessionVersion: number;
  subgroupSizes: Record<string, number>;
  baselineTau: number;
  sliders: Record<string, number>;
  whatif: WhatifResponse | null;
  baselineWhatif: WhatifResponse | null;
  report: ReportDoc | null;
  pending: boolean;
  lastIssuedSeq: number;
  lastAppliedSeq: number;
}

export function initialState(): DashboardState {
  return {
    session: null,
    sessionVersion: 0,
    subgroupSizes: {},
    baselineTau: 0.5,
    sliders: {},
    whatif: null,
    baselineWhatif: null,
    report: null,
    pending: false,
    lastIssuedSeq: 0,
    lastAppliedSeq: 0,
  };
}

export function clamp01(value: number): number {
  return Math.min(1, Math.max(0, value));
}

export function setSlider(state: DashboardState, subgroup: string, tau: number): void {
  state.sliders[subgroup] = clamp01(tau);
}

export function setBaseline(state: DashboardState, tau: number): void {
  state.baselineTau = clamp01(tau);
  for (const subgroup of Object.keys(state.sliders)) {
    state.sliders[subgroup] = state.baselineTau;
  }
}

export function onPartition(
  state: DashboardState,
  subgroups: Record<string, number>,
  version: number,
): void {
  state.subgroupSizes = subgroups;
  state.sessionVersion = version;
  state.sliders = {};
  for (const subgroup of Object.keys(subgroups).sort()) {
    state.sliders[subgroup] = state.baselineTau;
  }
  state.whatif = null;
  state.baselineWhatif = null;
  state.report = null;
  state.lastIssuedSeq = 0;
  state.lastAppliedSeq = 0;
}

export function issueRequest(state: DashboardState): number {
  state.pending = true;
  return ++state.lastIssuedSeq;
}

/** Apply a what-if response; returns false when it was discarded as stale. */
export function applyWhatif(
  state: DashboardState,
  seq: number,
  response: WhatifResponse,
): boolean {
  if (seq <= state.lastAppliedSeq) return false;
  if (response.version !== state.sessionVersion) return false;
  state.lastAppliedSeq = seq;
  state.whatif = response;
  if (state.pending && seq === state.lastIssuedSeq) state.pending = false;
  return true;
}

/** Snap the sliders to an optimization run's thresholds. */
export function applyReport(state: DashboardState, report: ReportDoc): void {
  state.report = report;
  for (const [subgroup, tau] of Object.entries(report.thresholds.per_subgroup)) {
    state.sliders[subgroup] = clamp01(tau);
  }
}
