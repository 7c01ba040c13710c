/** DOM wiring for the trial console.
 *
 * Workflow: create (or open) a trial, then repeat draw -> record. Each
 * response replaces the rendered snapshot; failures only raise a banner.
 */

import { ApiError, TrialApi } from "./api.js";
import { policyLabel, renderAllocationBars, renderErrorBanner, renderSnapshot } from "./render.js";
import { ECMO_SEQUENCE, ecmoPreset, fourArmPreset, twoArmDefault } from "./presets.js";
import { bannerFor, initialState, withBanner, withDraw, withSnapshot } from "./state.js";
import type { ConsoleState } from "./state.js";

const api = new TrialApi("");
let state: ConsoleState = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function redraw(): void {
  const view = el<HTMLDivElement>("trial-view");
  const bannerBox = el<HTMLDivElement>("banner");
  bannerBox.innerHTML = state.banner
    ? renderErrorBanner(state.banner.kind, state.banner.message)
    : "";
  if (!state.snapshot) {
    view.innerHTML = '<p class="hint">Create or open a trial to begin.</p>';
    return;
  }
  const parts = [renderSnapshot(state.snapshot, state.history ?? undefined)];
  if (state.lastDraw) {
    parts.unshift(
      `<div class="last-draw">Patient ${state.lastDraw.patient} drawn to ` +
        `<strong>${state.snapshot.arms[state.lastDraw.arm]}</strong> from</div>`,
      renderAllocationBars(state.snapshot.arms, state.lastDraw.allocation),
    );
  }
  view.innerHTML = parts.join("\n");
}

function fail(err: unknown): void {
  const e = err instanceof ApiError ? err : new ApiError(0, "network", String(err));
  state = withBanner(state, bannerFor(e.status, e.code, e.message));
  redraw();
}

async function refresh(id: string): Promise<void> {
  const res = await api.evidence(id, true);
  state = withSnapshot(state, res, res.history ?? null);
  redraw();
}

async function onCreate(): Promise<void> {
  const id = el<HTMLInputElement>("trial-id").value.trim();
  const preset = el<HTMLSelectElement>("preset").value;
  const pNull = Number(el<HTMLInputElement>("p-null").value);
  try {
    const config =
      preset === "four-arm"
        ? fourArmPreset(id, pNull)
        : preset === "ecmo"
          ? ecmoPreset(id, pNull)
          : twoArmDefault(id, pNull);
    el<HTMLSpanElement>("policy-label").textContent = policyLabel(
      config.policy.method,
      config.policy.p_null,
    );
    await api.createTrial(config);
    await refresh(id);
  } catch (err) {
    fail(err);
  }
}

async function onOpen(): Promise<void> {
  try {
    await refresh(el<HTMLInputElement>("trial-id").value.trim());
  } catch (err) {
    fail(err);
  }
}

async function onDraw(): Promise<void> {
  if (!state.snapshot) return;
  const id = state.snapshot.id;
  try {
    const draw = await api.draw(id);
    state = withDraw(state, draw);
    await refresh(id);
  } catch (err) {
    fail(err);
  }
}

async function onRecord(outcome: 0 | 1): Promise<void> {
  if (!state.snapshot || !state.lastDraw) return;
  const id = state.snapshot.id;
  try {
    await api.recordOutcome(id, state.lastDraw.patient, outcome, state.lastDraw.arm);
    await refresh(id);
  } catch (err) {
    fail(err);
  }
}

/** Walk the bundled 12-patient sequence against the live server; the final
 * posterior shown is whatever the server's last response carries. */
async function onEcmoWalkthrough(): Promise<void> {
  const id = el<HTMLInputElement>("trial-id").value.trim() || "ecmo-walkthrough";
  try {
    await api.createTrial(ecmoPreset(id, Number(el<HTMLInputElement>("p-null").value)));
    for (let patient = 1; patient <= ECMO_SEQUENCE.length; patient++) {
      const [arm, outcome] = ECMO_SEQUENCE[patient - 1];
      await api.recordOutcome(id, patient, outcome as 0 | 1, arm, true);
    }
    await refresh(id);
  } catch (err) {
    fail(err);
  }
}

export function wire(): void {
  el<HTMLButtonElement>("create").addEventListener("click", () => void onCreate());
  el<HTMLButtonElement>("open").addEventListener("click", () => void onOpen());
  el<HTMLButtonElement>("draw").addEventListener("click", () => void onDraw());
  el<HTMLButtonElement>("success").addEventListener("click", () => void onRecord(1));
  el<HTMLButtonElement>("failure").addEventListener("click", () => void onRecord(0));
  el<HTMLButtonElement>("ecmo").addEventListener("click", () => void onEcmoWalkthrough());
  const slider = el<HTMLInputElement>("p-null");
  slider.addEventListener("input", () => {
    el<HTMLSpanElement>("p-null-value").textContent = slider.value;
    el<HTMLSpanElement>("policy-label").textContent = policyLabel(
      "point_null_binomial",
      Number(slider.value),
    );
  });
  redraw();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  wire();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wire);
}
