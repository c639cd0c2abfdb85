// Display transforms for the therapy-response scheme. The thresholds mirror
// the documented service semantics (docs/api.md, docs/formats.md): a change
// of more than 0.1 logMAR leaves the stabilizer band, boundaries inclusive.
// The integration suite asserts that agreement counts derived with these
// transforms equal the backend evaluation exactly.

import type { WslLabel } from "./types.js";

export const WSL_THRESHOLD = 0.1;

export const LABELS: WslLabel[] = ["Winner", "Stabilizer", "Loser"];

export function labelFromDelta(deltaLogmar: number): WslLabel {
  if (deltaLogmar < -WSL_THRESHOLD) return "Winner";
  if (deltaLogmar > WSL_THRESHOLD) return "Loser";
  return "Stabilizer";
}

export const LABEL_COLORS: Record<WslLabel, string> = {
  Winner: "#8dc73e",
  Stabilizer: "#4f81bd",
  Loser: "#ed135a",
};

export interface AgreementCounts {
  // rows: truth, columns: forecast, both in LABELS order
  matrix: number[][];
  correct: number;
  total: number;
}

export function emptyAgreement(): AgreementCounts {
  return { matrix: LABELS.map(() => LABELS.map(() => 0)), correct: 0, total: 0 };
}

export function recordAgreement(counts: AgreementCounts, truth: WslLabel, forecast: WslLabel): void {
  counts.matrix[LABELS.indexOf(truth)][LABELS.indexOf(forecast)] += 1;
  counts.total += 1;
  if (truth === forecast) counts.correct += 1;
}
