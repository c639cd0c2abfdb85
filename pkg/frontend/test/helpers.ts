// Shared test scaffolding: a canned-response fetch and timeline builders.

import type { Timeline, VaPoint } from "../src/types.js";
import type { FetchLike } from "../src/api.js";

export function jsonResponse(body: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  } as unknown as Response;
}

export interface RecordedRequest {
  url: string;
  method: string;
  body?: unknown;
}

/** Full series held server-side; timeline requests honor the upto limit. */
export class FakeService {
  requests: RecordedRequest[] = [];
  failNextAnnotation = false;
  annotations: unknown[] = [];

  constructor(private series: VaPoint[], private patient = "p1", private eye = "right") {}

  timeline(upto?: number): Timeline {
    const va = upto === undefined ? this.series : this.series.slice(0, upto + 1);
    return {
      patient: this.patient,
      eye: this.eye,
      sex: "female",
      birth_year: 1950,
      total_examinations: this.series.length,
      upto: upto ?? null,
      va,
      treatments: [],
      diagnoses: [],
      oct: [],
    };
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    this.requests.push({ url, method, body });
    if (url.includes("/timeline")) {
      const match = /upto=(\d+)/.exec(url);
      return jsonResponse(this.timeline(match ? Number(match[1]) : undefined));
    }
    if (url.endsWith("/annotations") && method === "POST") {
      if (this.failNextAnnotation) {
        this.failNextAnnotation = false;
        return jsonResponse({ error: "injected failure" }, 503);
      }
      const stored = {
        id: this.annotations.length + 1,
        timestamp: "2026-01-01T00:00:00+00:00",
        annotator: (body as { annotator?: string }).annotator ?? "anonymous",
        ...(body as object),
        va_decimal: (body as { va_decimal?: number }).va_decimal ?? null,
        note: null,
      };
      this.annotations.push(stored);
      return jsonResponse(stored, 201);
    }
    if (url.includes("/annotations")) {
      return jsonResponse({ annotations: this.annotations });
    }
    throw new Error(`unhandled request ${method} ${url}`);
  };
}

/** logMAR values -> VA points (decimal = 10^-lm). */
export function seriesFromLogmar(logmars: number[]): VaPoint[] {
  return logmars.map((lm, index) => ({
    index,
    date: `2016-01-${String(index + 1).padStart(2, "0")}`,
    decimal: Math.pow(10, -lm),
    logmar: lm,
  }));
}

// The 19-point reference series: truth labels are Loser at 4, Winner at 5,
// Loser at 13 and 18, Stabilizer elsewhere.
export const REFERENCE_LOGMAR = [
  0.6, 0.6, 0.8, 0.5, 0.8, 0.5, 0.5, 0.5, 0.5, 0.6,
  0.6, 0.6, 0.6, 0.8, 0.8, 0.8, 0.8, 0.8, 1.0,
];
