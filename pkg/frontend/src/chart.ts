// Pure SVG/HTML renderers. Every function maps service-sourced data to
// markup strings; nothing here fetches or computes clinical values beyond
// the documented display transforms.

import type { PredictionResult, Timeline, VaPoint } from "./types.js";
import { AgreementCounts, LABELS, WSL_THRESHOLD } from "./wsl.js";
import type { ScoredForecast } from "./state.js";

const WIDTH = 720;
const HEIGHT = 220;
const MARGIN = { left: 46, right: 150, top: 16, bottom: 28 };

// Clinical convention: lower logMAR (better vision) is plotted upward, so
// the y axis runs reversed relative to the numeric value.
const LOGMAR_MIN = -0.35;
const LOGMAR_MAX = 1.45;

function x(index: number, total: number): number {
  const span = WIDTH - MARGIN.left - MARGIN.right;
  const denom = Math.max(total - 1, 1);
  return MARGIN.left + (span * index) / denom;
}

function yLogmar(value: number): number {
  const span = HEIGHT - MARGIN.top - MARGIN.bottom;
  const t = (value - LOGMAR_MIN) / (LOGMAR_MAX - LOGMAR_MIN);
  return MARGIN.top + span * t;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function polyline(points: Array<[number, number]>, stroke: string, dash = ""): string {
  if (!points.length) return "";
  const attr = points.map(([px, py]) => `${px.toFixed(1)},${py.toFixed(1)}`).join(" ");
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<polyline fill="none" stroke="${stroke}" stroke-width="1.5"${dashAttr} points="${attr}"/>`;
}

export interface VaSeriesOverlay {
  name: string;
  color: string;
  points: Array<{ index: number; logmar: number }>;
  dashed?: boolean;
}

/** Acuity panel: observed series plus any forecast overlays, reversed axis. */
export function renderVaPanel(
  observed: VaPoint[],
  totalExaminations: number,
  overlays: VaSeriesOverlay[] = [],
): string {
  const parts: string[] = [];
  parts.push(`<svg class="panel" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="visual acuity">`);
  for (const grid of [0.0, 0.5, 1.0]) {
    const gy = yLogmar(grid);
    parts.push(`<line x1="${MARGIN.left}" y1="${gy.toFixed(1)}" x2="${WIDTH - MARGIN.right}" y2="${gy.toFixed(1)}" stroke="#ddd"/>`);
    parts.push(`<text x="6" y="${(gy + 4).toFixed(1)}" class="axis">${grid.toFixed(1)}</text>`);
  }
  parts.push(`<text x="6" y="12" class="axis">logMAR (reversed: up is better)</text>`);
  parts.push(
    polyline(
      observed.map((p) => [x(p.index, totalExaminations), yLogmar(p.logmar)]),
      "#333",
    ),
  );
  for (const p of observed) {
    parts.push(
      `<circle cx="${x(p.index, totalExaminations).toFixed(1)}" cy="${yLogmar(p.logmar).toFixed(1)}" r="3.5" fill="#333">` +
        `<title>exam ${p.index}: VA ${p.decimal} (${p.logmar.toFixed(2)} logMAR) on ${esc(p.date)}</title></circle>`,
    );
  }
  let legendY = 18;
  for (const overlay of overlays) {
    parts.push(
      polyline(
        overlay.points.map((p) => [x(p.index, totalExaminations), yLogmar(p.logmar)]),
        overlay.color,
        overlay.dashed ? "5,3" : "",
      ),
    );
    for (const p of overlay.points) {
      parts.push(
        `<circle cx="${x(p.index, totalExaminations).toFixed(1)}" cy="${yLogmar(p.logmar).toFixed(1)}" r="2.8" fill="${overlay.color}"/>`,
      );
    }
    parts.push(
      `<text x="${WIDTH - MARGIN.right + 8}" y="${legendY}" fill="${overlay.color}" class="legend">${esc(overlay.name)}</text>`,
    );
    legendY += 16;
  }
  parts.push("</svg>");
  return parts.join("");
}

/** Change panel: per-examination logMAR deltas with the stabilizer band. */
export function renderDeltaPanel(
  deltas: Array<{ index: number; delta: number; color: string }>,
  totalExaminations: number,
): string {
  const scale = (d: number) => {
    const span = HEIGHT - MARGIN.top - MARGIN.bottom;
    const t = (d + 0.45) / 0.9;
    return MARGIN.top + span * Math.min(Math.max(t, 0), 1);
  };
  const parts: string[] = [];
  parts.push(`<svg class="panel" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="va change">`);
  for (const band of [-WSL_THRESHOLD, WSL_THRESHOLD]) {
    const by = scale(band);
    parts.push(`<line x1="${MARGIN.left}" y1="${by.toFixed(1)}" x2="${WIDTH - MARGIN.right}" y2="${by.toFixed(1)}" stroke="#bbb" stroke-dasharray="4,3"/>`);
  }
  parts.push(`<line x1="${MARGIN.left}" y1="${scale(0).toFixed(1)}" x2="${WIDTH - MARGIN.right}" y2="${scale(0).toFixed(1)}" stroke="#ddd"/>`);
  parts.push(`<text x="6" y="12" class="axis">&#916; logMAR (band &#177;${WSL_THRESHOLD})</text>`);
  for (const d of deltas) {
    parts.push(
      `<circle cx="${x(d.index, totalExaminations).toFixed(1)}" cy="${scale(d.delta).toFixed(1)}" r="3.5" fill="${d.color}">` +
        `<title>exam ${d.index}: &#916; ${d.delta.toFixed(2)}</title></circle>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/** Dot strip: one row per forecast source, green = correct, red = incorrect. */
export function renderAgreementDots(
  rows: Array<{ name: string; entries: ScoredForecast[] }>,
  totalExaminations: number,
): string {
  const rowHeight = 26;
  const height = MARGIN.top + rows.length * rowHeight + 8;
  const parts: string[] = [];
  parts.push(`<svg class="panel" viewBox="0 0 ${WIDTH} ${height}" role="img" aria-label="forecast quality">`);
  rows.forEach((row, r) => {
    const cy = MARGIN.top + r * rowHeight + rowHeight / 2;
    parts.push(`<text x="${WIDTH - MARGIN.right + 8}" y="${cy + 4}" class="legend">${esc(row.name)}</text>`);
    for (const entry of row.entries) {
      const color = entry.correct ? "#8dc73e" : "#ed135a";
      parts.push(
        `<circle cx="${x(entry.index, totalExaminations).toFixed(1)}" cy="${cy}" r="5" fill="${color}">` +
          `<title>exam ${entry.index}: forecast ${entry.forecast}, truth ${entry.truth}</title></circle>`,
      );
    }
  });
  parts.push("</svg>");
  return parts.join("");
}

/** Running agreement table shown while annotating. */
export function renderAgreementTable(counts: AgreementCounts): string {
  const head = LABELS.map((l) => `<th>${l}</th>`).join("");
  const body = LABELS.map((truth, i) => {
    const cells = LABELS.map((_f, j) => `<td>${counts.matrix[i][j]}</td>`).join("");
    return `<tr><th>${truth}</th>${cells}</tr>`;
  }).join("");
  const rate = counts.total ? ((100 * counts.correct) / counts.total).toFixed(1) : "0.0";
  return (
    `<table class="agreement"><thead><tr><th>truth \\ forecast</th>${head}</tr></thead>` +
    `<tbody>${body}</tbody></table>` +
    `<p class="agreement-summary">correct <strong>${counts.correct}</strong> of ` +
    `<strong>${counts.total}</strong> (${rate}%)</p>`
  );
}

/** Biomarker strip and disease banner for the timeline view. */
export function renderBiomarkerStrip(timeline: Timeline): string {
  if (!timeline.oct.length) return `<p class="muted">no OCT biomarker data in view</p>`;
  const names = Object.keys(timeline.oct[0].biomarkers);
  const rows = names
    .map((name) => {
      const cells = timeline.oct
        .map((scan) => {
          const st = scan.biomarkers[name];
          const cls = st.label === "pathological" ? "path" : st.label === "physiological" ? "phys" : "unknown";
          const provenance = st.provenance ?? "none";
          return `<td class="bio ${cls}" title="${esc(scan.date)} ${name}: ${st.label} (${provenance})"></td>`;
        })
        .join("");
      return `<tr><th>${esc(name)}</th>${cells}</tr>`;
    })
    .join("");
  return `<table class="biostrip"><tbody>${rows}</tbody></table>`;
}

export function renderDiseaseBanner(timeline: Timeline): string {
  const flags = new Set<string>();
  for (const diag of timeline.diagnoses) {
    for (const [flag, value] of Object.entries(diag.flags)) {
      if (value) flags.add(flag);
    }
  }
  const diseases = [...flags].sort();
  const treatments = timeline.treatments.length;
  return (
    `<p class="banner">${esc(timeline.patient)} &middot; ${esc(timeline.eye)} eye &middot; ` +
    `born ${timeline.birth_year} &middot; ${esc(timeline.sex)} &middot; ` +
    `${diseases.length ? diseases.map(esc).join(", ") : "no explicit disease flags"} &middot; ` +
    `${treatments} injections in view</p>`
  );
}

export function overlayFromPredictions(
  name: string,
  color: string,
  predictions: PredictionResult[],
): VaSeriesOverlay {
  return {
    name,
    color,
    dashed: true,
    points: predictions
      .filter((p) => p.predicted_va_decimal !== null)
      .map((p) => ({
        index: p.index,
        logmar: -Math.log10(p.predicted_va_decimal as number),
      })),
  };
}
