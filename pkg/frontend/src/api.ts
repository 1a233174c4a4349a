import type { CropRect, Decision, ScreeningList, ScreeningRecord, Summary } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** Network failures and server errors are worth retrying; 4xx are not. */
  get retryable(): boolean {
    return this.status === 0 || this.status >= 500;
  }
}

type FetchLike = typeof fetch;

/** Thin typed client over the service's HTTP API. All numbers displayed by
 * the console come from these payloads; the client computes nothing. */
export class ScreeningApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/api/v1${path}`, init);
    } catch (err) {
      throw new ApiError(0, `network error: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async submitScreening(
    image: Blob,
    patientCode: string,
    eye?: "left" | "right",
    crop?: CropRect,
  ): Promise<ScreeningRecord> {
    const form = new FormData();
    form.append("image", image, "fundus.png");
    form.append("patient_code", patientCode);
    if (eye) form.append("eye", eye);
    if (crop) {
      form.append("crop_x", String(crop.x));
      form.append("crop_y", String(crop.y));
      form.append("crop_side", String(crop.side));
    }
    return this.request<ScreeningRecord>("/screenings", { method: "POST", body: form });
  }

  async getScreening(id: string): Promise<ScreeningRecord> {
    return this.request<ScreeningRecord>(`/screenings/${id}`);
  }

  async listScreenings(patientCode?: string, page = 1, pageSize = 50): Promise<ScreeningList> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    if (patientCode) params.set("patient_code", patientCode);
    return this.request<ScreeningList>(`/screenings?${params}`);
  }

  async recordDecision(id: string, decision: Decision): Promise<ScreeningRecord> {
    return this.request<ScreeningRecord>(`/screenings/${id}/decision`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ decision }),
    });
  }

  async getSummary(): Promise<Summary> {
    return this.request<Summary>("/summary");
  }
}
