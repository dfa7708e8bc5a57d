// Page wiring: upload, partition, sliders, live metrics, optimization runs.

import { ApiError, Client } from "./api.js";
import { debounce } from "./debounce.js";
import { fmt4 } from "./format.js";
import { renderBanner, renderMetricsPanel, renderReportComparison } from "./render.js";
import {
  applyReport,
  applyWhatif,
  initialState,
  issueRequest,
  onPartition,
  setBaseline,
  setSlider,
} from "./state.js";

const DEBOUNCE_MS = 150;

const state = initialState();
let client = new Client("http://127.0.0.1:8000");

const $ = (id: string) => document.getElementById(id) as HTMLElement;
// works for both <input> and <select>; only .value is read
const input = (id: string) => document.getElementById(id) as HTMLInputElement | HTMLSelectElement;

function showBanner(message: string, onRetry?: () => void): void {
  const holder = $("banner-holder");
  holder.replaceChildren(renderBanner(message, onRetry));
}

function clearBanner(): void {
  $("banner-holder").replaceChildren();
}

function renderPanel(): void {
  if (state.whatif) {
    $("metrics-holder").replaceChildren(renderMetricsPanel(state.whatif));
  }
  if (state.baselineWhatif && state.whatif !== state.baselineWhatif) {
    $("baseline-holder").replaceChildren(renderMetricsPanel(state.baselineWhatif));
    $("baseline-section").hidden = false;
  }
}

async function requestWhatif(): Promise<void> {
  if (!state.session) return;
  const seq = issueRequest(state);
  try {
    const response = await client.whatif(state.session, state.sliders);
    if (applyWhatif(state, seq, response)) {
      if (!state.baselineWhatif) state.baselineWhatif = response;
      clearBanner();
      renderPanel();
    }
  } catch (err) {
    state.pending = false;
    const message = err instanceof ApiError ? err.message : `network failure: ${err}`;
    showBanner(message, () => void requestWhatif());
  }
}

const debouncedWhatif = debounce(() => void requestWhatif(), DEBOUNCE_MS);

function buildSliders(): void {
  const holder = $("sliders");
  holder.replaceChildren();
  for (const subgroup of Object.keys(state.sliders).sort()) {
    const row = document.createElement("label");
    row.className = "slider-row";
    const name = document.createElement("span");
    name.textContent = `${subgroup} (${state.subgroupSizes[subgroup]})`;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "1";
    slider.step = "0.01";
    slider.value = String(state.sliders[subgroup]);
    slider.dataset.subgroup = subgroup;
    const value = document.createElement("span");
    value.className = "slider-value";
    value.textContent = fmt4(state.sliders[subgroup]);
    slider.addEventListener("input", () => {
      setSlider(state, subgroup, Number(slider.value));
      value.textContent = fmt4(state.sliders[subgroup]);
      debouncedWhatif();
    });
    row.append(name, slider, value);
    holder.appendChild(row);
  }
}

function syncSliderPositions(): void {
  for (const slider of document.querySelectorAll<HTMLInputElement>("#sliders input")) {
    const subgroup = slider.dataset.subgroup as string;
    slider.value = String(state.sliders[subgroup]);
    const value = slider.parentElement?.querySelector(".slider-value");
    if (value) value.textContent = fmt4(state.sliders[subgroup]);
  }
}

async function handleUpload(): Promise<void> {
  client = new Client(input("api-url").value.replace(/\/$/, ""));
  const manifest: Record<string, unknown> = {
    id: input("col-id").value,
    score: input("col-score").value,
    label: input("col-label").value,
  };
  if (input("col-attribute").value) manifest.attribute = input("col-attribute").value;
  if (input("col-features").value) {
    manifest.features = input("col-features").value.split(",").map((c) => c.trim());
  }
  try {
    const csv = (document.getElementById("csv-text") as HTMLTextAreaElement).value;
    const created = await client.createSession(csv, manifest);
    state.session = created.session;
    $("session-info").textContent = `session ${created.session} · ${created.instances} instances`;
    clearBanner();
  } catch (err) {
    showBanner(err instanceof ApiError ? err.message : String(err));
  }
}

async function handlePartition(): Promise<void> {
  if (!state.session) {
    showBanner("upload a dataset first");
    return;
  }
  const byAttribute = input("partition-attribute").value;
  const spec: Record<string, unknown> = byAttribute
    ? { attribute: byAttribute }
    : {
        cluster: {
          k: input("cluster-k").value === "auto" ? "auto" : Number(input("cluster-k").value),
          k_range: [Number(input("cluster-k-min").value), Number(input("cluster-k-max").value)],
          seed: Number(input("cluster-seed").value),
        },
      };
  try {
    const summary = await client.setPartition(state.session, spec);
    setBaseline(state, Number(input("baseline-tau").value));
    onPartition(state, summary.subgroups, summary.version);
    for (const subgroup of Object.keys(summary.subgroups)) {
      state.sliders[subgroup] = state.baselineTau;
    }
    buildSliders();
    clearBanner();
    $("baseline-section").hidden = true;
    state.baselineWhatif = null;
    await requestWhatif();
  } catch (err) {
    showBanner(err instanceof ApiError ? err.message : String(err));
  }
}

async function handleOptimize(): Promise<void> {
  if (!state.session) {
    showBanner("upload a dataset and set a partition first");
    return;
  }
  const gridType = input("grid-type").value;
  const config: Record<string, unknown> = {
    tau_base: Number(input("baseline-tau").value),
    mode: input("run-mode").value,
    utility: input("run-utility").value,
    aggregate_objective: input("run-aggregate").value,
    grid:
      gridType === "uniform"
        ? { type: "uniform", step: Number(input("grid-step").value) }
        : { type: "observed_scores" },
  };
  try {
    const report = await client.optimize(state.session, config);
    applyReport(state, report);
    syncSliderPositions();
    $("report-holder").replaceChildren(renderReportComparison(report));
    clearBanner();
    await requestWhatif();
  } catch (err) {
    showBanner(err instanceof ApiError ? err.message : String(err));
  }
}

export function bind(): void {
  $("upload-button").addEventListener("click", () => void handleUpload());
  $("partition-button").addEventListener("click", () => void handlePartition());
  $("run-button").addEventListener("click", () => void handleOptimize());
  input("baseline-tau").addEventListener("input", () => {
    setBaseline(state, Number(input("baseline-tau").value));
    $("baseline-tau-value").textContent = fmt4(state.baselineTau);
    syncSliderPositions();
    if (state.session && Object.keys(state.sliders).length) debouncedWhatif();
  });
}

if (typeof document !== "undefined" && document.getElementById("upload-button")) {
  bind();
}
