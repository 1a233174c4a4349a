import { ApiError, ScreeningApi } from "./api.js";
import { clampCrop, defaultCrop, isWithinBounds } from "./crop.js";
import type { CropRect, Decision, ScreeningRecord } from "./types.js";

export interface StagedImage {
  blob: Blob;
  mimeType: string;
  width: number;
  height: number;
}

const SUPPORTED_TYPES = ["image/png", "image/jpeg"];

/** Client-side state for one technician working through one screening.
 * Images can be staged offline; submission happens when the server is
 * reachable, and a failed submit preserves the staged state for retry. */
export class ScreeningSession {
  patientCode = "";
  eye: "left" | "right" | undefined;
  staged: StagedImage | null = null;
  crop: CropRect | null = null;
  lastRecord: ScreeningRecord | null = null;
  lastError: { message: string; retryable: boolean } | null = null;
  submitting = false;

  constructor(private readonly api: ScreeningApi) {}

  stageImage(image: StagedImage): void {
    if (!SUPPORTED_TYPES.includes(image.mimeType)) {
      throw new Error(`unsupported file type ${image.mimeType}; use PNG or JPEG`);
    }
    if (image.width <= 0 || image.height <= 0) {
      throw new Error("image has no pixels");
    }
    this.staged = image;
    this.crop = defaultCrop(image.width, image.height);
    this.lastRecord = null;
    this.lastError = null;
  }

  setPatientCode(code: string): void {
    this.patientCode = code.trim();
  }

  setCrop(rect: CropRect): void {
    if (!this.staged) throw new Error("no image staged");
    this.crop = clampCrop(rect, this.staged.width, this.staged.height);
  }

  get canSubmit(): boolean {
    return this.staged !== null && this.patientCode.length > 0 && !this.submitting;
  }

  get canDecide(): boolean {
    return this.lastRecord !== null;
  }

  async submit(): Promise<ScreeningRecord> {
    if (!this.canSubmit || !this.staged) {
      throw new Error("submit requires a staged image and a patient code");
    }
    const crop = this.crop ?? defaultCrop(this.staged.width, this.staged.height);
    if (!isWithinBounds(crop, this.staged.width, this.staged.height)) {
      // clamping should make this unreachable; refuse rather than send bad bounds
      throw new Error("crop overlay is out of bounds");
    }
    this.submitting = true;
    this.lastError = null;
    try {
      const record = await this.api.submitScreening(this.staged.blob, this.patientCode, this.eye, crop);
      this.lastRecord = record;
      return record;
    } catch (err) {
      // session (staged image, code, crop) survives so the technician can retry
      if (err instanceof ApiError) {
        this.lastError = { message: err.message, retryable: err.retryable };
      } else {
        this.lastError = { message: String(err), retryable: true };
      }
      throw err;
    } finally {
      this.submitting = false;
    }
  }

  async recordDecision(decision: Decision): Promise<ScreeningRecord> {
    if (!this.lastRecord) throw new Error("no screening result to decide on");
    try {
      const updated = await this.api.recordDecision(this.lastRecord.screening_id, decision);
      this.lastRecord = updated;
      return updated;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        throw new Error("screening no longer exists on the server; refresh the session");
      }
      throw err;
    }
  }

  reset(): void {
    this.staged = null;
    this.crop = null;
    this.lastRecord = null;
    this.lastError = null;
  }
}
