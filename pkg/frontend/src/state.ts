// Annotation session state machine.
//
// Blinding is structural: the session only ever requests the timeline up to
// the examination *before* the one being forecast, so future values never
// reach the client (and therefore never the DOM) until the forecast for the
// current examination has been submitted. Failed submissions stay in a
// retry queue without advancing the cursor.

import { ApiError, DashboardApi } from "./api.js";
import type { Timeline, VaPoint, WslLabel } from "./types.js";
import { AgreementCounts, emptyAgreement, labelFromDelta, recordAgreement } from "./wsl.js";

export const FIRST_FORECAST_INDEX = 4;

export interface PendingAnnotation {
  index: number;
  label: WslLabel;
  vaDecimal?: number;
  error: string;
}

export interface ScoredForecast {
  index: number;
  forecast: WslLabel;
  truth: WslLabel;
  correct: boolean;
}

export class AnnotationSession {
  visible: Timeline | null = null;
  cursor = FIRST_FORECAST_INDEX;
  totalExaminations = 0;
  scored: ScoredForecast[] = [];
  agreement: AgreementCounts = emptyAgreement();
  pending: PendingAnnotation[] = [];

  constructor(
    private api: DashboardApi,
    readonly patient: string,
    readonly eye: string,
    readonly annotator: string = "dashboard",
  ) {}

  get done(): boolean {
    return this.totalExaminations > 0 && this.cursor >= this.totalExaminations;
  }

  get remaining(): number {
    return Math.max(0, this.totalExaminations - this.cursor);
  }

  async start(): Promise<void> {
    this.cursor = FIRST_FORECAST_INDEX;
    this.scored = [];
    this.agreement = emptyAgreement();
    this.pending = [];
    this.visible = await this.api.timeline(this.patient, this.eye, this.cursor - 1);
    this.totalExaminations = this.visible.total_examinations;
  }

  /** VA points the annotator may see right now (strictly before the cursor). */
  visiblePoints(): VaPoint[] {
    return this.visible ? this.visible.va : [];
  }

  /**
   * Submit the forecast for the current examination. On success the truth
   * for that examination becomes visible, the agreement updates, and the
   * cursor advances. On failure the forecast is queued for retry.
   */
  async submit(label: WslLabel, vaDecimal?: number): Promise<ScoredForecast | null> {
    if (this.done || !this.visible) return null;
    const index = this.cursor;
    try {
      await this.api.annotate(this.patient, this.eye, index, label, {
        annotator: this.annotator,
        vaDecimal,
      });
    } catch (err) {
      const message = err instanceof ApiError ? err.message : String(err);
      this.pending.push({ index, label, vaDecimal, error: message });
      return null;
    }
    return this.reveal(index, label);
  }

  private async reveal(index: number, label: WslLabel): Promise<ScoredForecast> {
    this.visible = await this.api.timeline(this.patient, this.eye, index);
    const va = this.visible.va;
    const current = va[va.length - 1];
    const previous = va[va.length - 2];
    const truth = labelFromDelta(current.logmar - previous.logmar);
    const entry: ScoredForecast = {
      index,
      forecast: label,
      truth,
      correct: truth === label,
    };
    this.scored.push(entry);
    recordAgreement(this.agreement, truth, label);
    this.cursor = index + 1;
    return entry;
  }

  /** Re-submit queued annotations; entries that fail again stay queued. */
  async retryPending(): Promise<number> {
    const queue = this.pending;
    this.pending = [];
    let succeeded = 0;
    for (const item of queue) {
      if (item.index !== this.cursor) {
        // the series advanced past it some other way; drop silently
        continue;
      }
      const scored = await this.submit(item.label, item.vaDecimal);
      if (scored) succeeded += 1;
    }
    return succeeded;
  }
}
