/** Wire types mirroring the screening service's JSON payloads. */

export interface CropRect {
  x: number;
  y: number;
  side: number;
}

export interface ScreeningRecord {
  screening_id: string;
  patient_code: string;
  created_at: string;
  probabilities: number[];
  grade: number;
  stage_name: string;
  dr_positive: boolean;
  dr_score: number;
  model_version: string;
  eye: string | null;
  crop: CropRect | null;
  technician_decision: string | null;
}

export interface ScreeningList {
  records: ScreeningRecord[];
  total: number;
  page: number;
  page_size: number;
  model_version: string;
}

export interface Summary {
  total_screenings: number;
  total_patients: number;
  per_grade: number[];
  dr_positive_rate: number;
  model_version: string;
}

export type Decision = "refer" | "monitor";
