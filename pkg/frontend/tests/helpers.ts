import type { ScreeningRecord, ScreeningList, Summary } from "../src/types.js";

export function makeRecord(overrides: Partial<ScreeningRecord> = {}): ScreeningRecord {
  return {
    screening_id: "abc123",
    patient_code: "P-001",
    created_at: "2026-08-24T10:00:00+00:00",
    probabilities: [0.05, 0.1, 0.6, 0.15, 0.1],
    grade: 2,
    stage_name: "Moderate NPDR",
    dr_positive: true,
    dr_score: 0.95,
    model_version: "deadbeef0123",
    eye: "left",
    crop: { x: 10, y: 10, side: 100 },
    technician_decision: null,
    ...overrides,
  };
}

export function makeList(records: ScreeningRecord[]): ScreeningList {
  return { records, total: records.length, page: 1, page_size: 50, model_version: "deadbeef0123" };
}

export function makeSummary(overrides: Partial<Summary> = {}): Summary {
  return {
    total_screenings: 4,
    total_patients: 3,
    per_grade: [1, 0, 2, 1, 0],
    dr_positive_rate: 0.75,
    model_version: "deadbeef0123",
    ...overrides,
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** Stub fetch that records calls and replays queued responses in order. */
export class FetchStub {
  calls: { url: string; init?: RequestInit }[] = [];
  private queue: (Response | Error)[] = [];

  push(response: Response | Error): void {
    this.queue.push(response);
  }

  get impl(): typeof fetch {
    return async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
      this.calls.push({ url: String(input), init });
      const next = this.queue.shift();
      if (next === undefined) throw new Error("FetchStub: no response queued");
      if (next instanceof Error) throw next;
      return next;
    };
  }
}

export function pngBlob(): Blob {
  return new Blob([new Uint8Array([137, 80, 78, 71])], { type: "image/png" });
}
