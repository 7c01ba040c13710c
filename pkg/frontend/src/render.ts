/** Pure HTML renderers for the trial console.
 *
 * Every function maps a server payload to markup; no statistics are computed
 * client-side, so each rendered number is a formatted copy of a value in the
 * most recent response (snapshot tests enforce this).
 */

import { logBf, pct, prob } from "./format.js";
import type { EvidencePayload, HistoryPayload, SnapshotPayload } from "./types.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Human label for the configured policy (p_null = 1 is equal randomization,
 * p_null = 0 is Thompson sampling). */
export function policyLabel(method: string, pNull?: number): string {
  if (method === "equal" || pNull === 1) return "equal randomization";
  if (method === "rpw") return "randomized play-the-winner";
  if (method === "fixed") return "fixed allocation";
  const engine = method === "point_null_normal" ? "normal" : "exact binomial";
  if (pNull === 0) return `Thompson sampling (${engine})`;
  return `point null RAR (${engine}, Pr(H0) = ${pNull ?? 0.5})`;
}

export function renderAllocationBars(arms: string[], allocation: number[]): string {
  const rows = arms
    .map((arm, i) => {
      const share = allocation[i];
      const width = Math.round(share * 1000) / 10;
      return (
        `<div class="alloc-row" data-arm="${i}">` +
        `<span class="alloc-label">${esc(arm)}</span>` +
        `<span class="alloc-bar"><span class="alloc-fill" style="width:${width}%"></span></span>` +
        `<span class="alloc-value">${pct(share)}</span>` +
        `</div>`
      );
    })
    .join("");
  return `<div class="alloc-bars">${rows}</div>`;
}

export function renderCounts(arms: string[], y: number[], n: number[]): string {
  const body = arms
    .map(
      (arm, i) =>
        `<tr><td>${esc(arm)}</td><td>${y[i]}</td><td>${n[i]}</td>` +
        `<td>${n[i] > 0 ? (y[i] / n[i]).toFixed(3) : "-"}</td></tr>`,
    )
    .join("");
  return (
    `<table class="counts"><thead><tr><th>Arm</th><th>Events</th><th>Trials</th>` +
    `<th>Proportion</th></tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderEvidence(evidence: EvidencePayload | null): string {
  if (!evidence) {
    return `<p class="evidence-missing">Evidence engine unavailable for the current data (equal-randomization back-up in effect).</p>`;
  }
  const header = evidence.hypotheses.map((h) => `<th>${esc(h)}</th>`).join("");
  const postRow = evidence.posterior.map((p) => `<td>${prob(p)}</td>`).join("");
  const bfVsNull = evidence.bf_log.map((row) => row[1]);
  const bfRow = bfVsNull.map((v) => `<td>${logBf(v)}</td>`).join("");
  return (
    `<table class="evidence"><thead><tr><th></th>${header}</tr></thead><tbody>` +
    `<tr><td>Pr(H | y)</td>${postRow}</tr>` +
    `<tr><td>log BF vs H0</td>${bfRow}</tr>` +
    `</tbody></table>`
  );
}

export function renderFallbackWarning(fallback: boolean): string {
  return fallback
    ? `<div class="warning">Evidence engine did not converge; the shown allocation is the equal-randomization back-up.</div>`
    : "";
}

/** Step-line SVG for a family of per-step series (posterior or log-BF traces). */
export function renderStepSeries(
  labels: string[],
  trace: (number[] | null)[],
  options: { width?: number; height?: number; yMin?: number; yMax?: number; title?: string } = {},
): string {
  const width = options.width ?? 420;
  const height = options.height ?? 160;
  const steps = trace.length;
  const finite = trace.flatMap((row) => (row ?? []).filter((v) => isFinite(v)));
  const yMin = options.yMin ?? Math.min(0, ...finite);
  const yMax = options.yMax ?? Math.max(1, ...finite);
  const sx = (t: number) => (steps <= 1 ? 0 : (t / (steps - 1)) * (width - 40) + 30);
  const sy = (v: number) => height - 20 - ((v - yMin) / (yMax - yMin || 1)) * (height - 35);
  const palette = ["#4363d8", "#e6194b", "#3cb44b", "#f58231", "#911eb4", "#46f0f0"];
  const paths = labels
    .map((label, series) => {
      const pts: string[] = [];
      let prev: number | null = null;
      trace.forEach((row, t) => {
        const v = row ? row[series] : null;
        if (v == null || !isFinite(v)) return;
        const x = sx(t);
        const y = sy(v);
        if (prev == null) pts.push(`M ${x.toFixed(1)} ${y.toFixed(1)}`);
        else pts.push(`H ${x.toFixed(1)} V ${y.toFixed(1)}`.replace("V", "L " + x.toFixed(1)));
        prev = v;
      });
      const color = palette[series % palette.length];
      return `<path d="${pts.join(" ")}" fill="none" stroke="${color}" data-series="${esc(label)}"/>`;
    })
    .join("");
  const legend = labels
    .map(
      (label, series) =>
        `<tspan x="${30 + series * 90}" fill="${palette[series % palette.length]}">${esc(label)}</tspan>`,
    )
    .join("");
  const title = options.title ? `<text x="30" y="12" class="chart-title">${esc(options.title)}</text>` : "";
  return (
    `<svg viewBox="0 0 ${width} ${height}" class="step-chart" role="img">` +
    `${title}${paths}<text y="${height - 4}" class="legend">${legend}</text></svg>`
  );
}

export function renderSnapshot(snapshot: SnapshotPayload, history?: HistoryPayload): string {
  const parts = [
    `<section class="snapshot" data-seq="${snapshot.seq}">`,
    `<h2>${esc(snapshot.id)}</h2>`,
    renderFallbackWarning(snapshot.fallback),
    `<h3>Next allocation (patient ${snapshot.next_patient})</h3>`,
    renderAllocationBars(snapshot.arms, snapshot.allocation),
    `<h3>Counts</h3>`,
    renderCounts(snapshot.arms, snapshot.counts.y, snapshot.counts.n),
    `<h3>Evidence</h3>`,
    renderEvidence(snapshot.evidence),
  ];
  if (history && snapshot.evidence) {
    parts.push(
      `<h3>Posterior trace</h3>`,
      renderStepSeries(snapshot.evidence.hypotheses, history.posterior_trace, {
        yMin: 0,
        yMax: 1,
        title: "Pr(H | y) by patient",
      }),
      `<h3>log BF vs H0 trace</h3>`,
      renderStepSeries(snapshot.evidence.hypotheses, history.log_bf_vs_null_trace, {
        title: "log BF vs H0 by patient",
      }),
    );
  }
  parts.push(`</section>`);
  return parts.join("\n");
}

/** The banner shown for a failed request; state is left untouched. */
export function renderErrorBanner(kind: "conflict" | "network" | "validation", message: string): string {
  const hint =
    kind === "conflict"
      ? "The trial advanced elsewhere; refresh to continue."
      : kind === "network"
        ? "Request failed; the view was not changed. Retry."
        : "";
  return `<div class="banner banner-${kind}">${esc(message)}${hint ? ` <em>${hint}</em>` : ""}</div>`;
}
