// DOM wiring: patient browser, blinded annotation flow, and the comparison
// view overlaying ground truth, model forecasts, and the expert's own
// annotations.

import { DashboardApi } from "./api.js";
import {
  overlayFromPredictions,
  renderAgreementDots,
  renderAgreementTable,
  renderBiomarkerStrip,
  renderDeltaPanel,
  renderDiseaseBanner,
  renderVaPanel,
} from "./chart.js";
import { AnnotationSession, FIRST_FORECAST_INDEX, ScoredForecast } from "./state.js";
import type { PatientSummary, PredictionResult, Timeline, WslLabel } from "./types.js";
import { LABELS, LABEL_COLORS, labelFromDelta } from "./wsl.js";

const api = new DashboardApi("");

const el = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
};

interface AppState {
  patients: PatientSummary[];
  models: string[];
  patient: string | null;
  eye: string;
  session: AnnotationSession | null;
  model: string | null;
}

const state: AppState = {
  patients: [],
  models: [],
  patient: null,
  eye: "right",
  session: null,
  model: null,
};

async function boot(): Promise<void> {
  const page = await api.listPatients(0, 200);
  state.patients = page.patients;
  state.models = page.models;
  state.model = page.models[0] ?? null;
  const select = el("patient-select") as HTMLSelectElement;
  select.innerHTML = page.patients
    .map((p) => {
      const eyes = Object.entries(p.eyes)
        .map(([side, e]) => `${side}:${e.examinations}`)
        .join(" ");
      return `<option value="${p.pseudo_id}">${p.pseudo_id} (${eyes})</option>`;
    })
    .join("");
  const modelSelect = el("model-select") as HTMLSelectElement;
  modelSelect.innerHTML = page.models.map((m) => `<option value="${m}">${m}</option>`).join("");
  select.onchange = () => void onPatientChosen();
  (el("eye-select") as HTMLSelectElement).onchange = () => void onPatientChosen();
  modelSelect.onchange = () => void renderCompare();
  for (const label of LABELS) {
    el(`annotate-${label.toLowerCase()}`).onclick = () => void onAnnotate(label);
  }
  el("retry-pending").onclick = () => void onRetry();
  if (page.patients.length) {
    select.value = page.patients[0].pseudo_id;
    await onPatientChosen();
  }
}

async function onPatientChosen(): Promise<void> {
  state.patient = (el("patient-select") as HTMLSelectElement).value;
  state.eye = (el("eye-select") as HTMLSelectElement).value;
  const summary = state.patients.find((p) => p.pseudo_id === state.patient);
  const eyeInfo = summary?.eyes[state.eye];
  if (!eyeInfo || eyeInfo.examinations < FIRST_FORECAST_INDEX + 1) {
    state.session = null;
    el("annotate-view").innerHTML =
      `<p class="muted">this eye has too few examinations to forecast</p>`;
    el("compare-view").innerHTML = "";
    return;
  }
  state.session = new AnnotationSession(api, state.patient, state.eye, "dashboard-user");
  await state.session.start();
  renderAnnotate();
  el("compare-view").innerHTML =
    `<p class="muted">finish annotating to unblind the comparison view</p>`;
}

function renderAnnotate(): void {
  const session = state.session;
  if (!session || !session.visible) return;
  const timeline = session.visible;
  const parts: string[] = [];
  parts.push(renderDiseaseBanner(timeline));
  parts.push(renderVaPanel(session.visiblePoints(), session.totalExaminations));
  parts.push(renderBiomarkerStrip(timeline));
  if (session.done) {
    parts.push(`<p><strong>series complete</strong>: all forecasts submitted.</p>`);
  } else {
    parts.push(
      `<p>forecast examination <strong>${session.cursor}</strong> of ` +
        `${session.totalExaminations - 1} (${session.remaining} to go)</p>`,
    );
  }
  parts.push(renderAgreementTable(session.agreement));
  if (session.scored.length) {
    parts.push(
      renderAgreementDots(
        [{ name: "you", entries: session.scored }],
        session.totalExaminations,
      ),
    );
  }
  if (session.pending.length) {
    parts.push(
      `<p class="error">submission failed (${session.pending[session.pending.length - 1].error}); ` +
        `kept locally, press retry.</p>`,
    );
  }
  el("annotate-view").innerHTML = parts.join("");
  for (const label of LABELS) {
    (el(`annotate-${label.toLowerCase()}`) as HTMLButtonElement).disabled = session.done;
  }
}

async function onAnnotate(label: WslLabel): Promise<void> {
  const session = state.session;
  if (!session || session.done) return;
  const vaInput = (el("va-input") as HTMLInputElement).value;
  const vaDecimal = vaInput ? Number(vaInput) : undefined;
  await session.submit(label, vaDecimal);
  renderAnnotate();
  if (session.done) await renderCompare();
}

async function onRetry(): Promise<void> {
  if (!state.session) return;
  await state.session.retryPending();
  renderAnnotate();
}

async function renderCompare(): Promise<void> {
  const session = state.session;
  if (!session || !session.done || !state.patient || !state.model) return;
  const timeline: Timeline = await api.timeline(state.patient, state.eye);
  const predictions: PredictionResult[] = [];
  for (let index = FIRST_FORECAST_INDEX; index < timeline.total_examinations; index += 1) {
    predictions.push(await api.predict(state.patient, state.eye, index, state.model));
  }
  const truthByIndex = new Map(timeline.va.map((p) => [p.index, p]));
  const modelScored: ScoredForecast[] = predictions.map((p) => {
    const current = truthByIndex.get(p.index);
    const previous = truthByIndex.get(p.index - 1);
    const truth = labelFromDelta((current?.logmar ?? 0) - (previous?.logmar ?? 0));
    return { index: p.index, forecast: p.label, truth, correct: p.label === truth };
  });
  const annotationOverlay = {
    name: "expert (you)",
    color: "#666",
    dashed: true,
    points: [] as Array<{ index: number; logmar: number }>,
  };
  const stored = await api.annotations(state.patient, state.eye);
  for (const a of stored.annotations) {
    if (a.va_decimal !== null && a.eye === state.eye) {
      annotationOverlay.points.push({ index: a.index, logmar: -Math.log10(a.va_decimal) });
    }
  }
  const parts: string[] = [];
  parts.push(renderDiseaseBanner(timeline));
  parts.push(
    renderVaPanel(timeline.va, timeline.total_examinations, [
      overlayFromPredictions(`model (${state.model})`, LABEL_COLORS.Stabilizer, predictions),
      annotationOverlay,
    ]),
  );
  parts.push(
    renderDeltaPanel(
      timeline.va
        .filter((p) => p.index > 0)
        .map((p) => {
          const prev = truthByIndex.get(p.index - 1);
          const delta = p.logmar - (prev?.logmar ?? p.logmar);
          return { index: p.index, delta, color: LABEL_COLORS[labelFromDelta(delta)] };
        }),
      timeline.total_examinations,
    ),
  );
  parts.push(
    renderAgreementDots(
      [
        { name: `model (${state.model})`, entries: modelScored },
        { name: "expert (you)", entries: session.scored },
      ],
      timeline.total_examinations,
    ),
  );
  el("compare-view").innerHTML = parts.join("");
}

void boot();
