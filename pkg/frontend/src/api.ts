// Thin typed client over the service's HTTP API. All clinical data shown
// anywhere in the UI flows through this module.

import type {
  PatientPage,
  PredictionResult,
  StoredAnnotation,
  Timeline,
  WslLabel,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class DashboardApi {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, (body as { error?: string }).error ?? "request failed");
    }
    return body as T;
  }

  listPatients(page = 0, size = 50): Promise<PatientPage> {
    return this.request(`/patients?page=${page}&size=${size}`);
  }

  /** Timeline limited to examinations 0..upto; omit upto for the full series. */
  timeline(patient: string, eye: string, upto?: number): Promise<Timeline> {
    const suffix = upto === undefined ? "" : `&upto=${upto}`;
    return this.request(`/patients/${patient}/timeline?eye=${eye}${suffix}`);
  }

  predict(patient: string, eye: string, index: number, model: string): Promise<PredictionResult> {
    return this.request("/predict", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ patient, eye, index, model }),
    });
  }

  annotate(
    patient: string,
    eye: string,
    index: number,
    label: WslLabel,
    options: { annotator?: string; vaDecimal?: number; note?: string } = {},
  ): Promise<StoredAnnotation> {
    return this.request("/annotations", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        patient,
        eye,
        index,
        label,
        annotator: options.annotator,
        va_decimal: options.vaDecimal,
        note: options.note,
      }),
    });
  }

  annotations(patient: string, eye?: string): Promise<{ annotations: StoredAnnotation[] }> {
    const suffix = eye ? `&eye=${eye}` : "";
    return this.request(`/annotations?patient=${patient}${suffix}`);
  }
}
