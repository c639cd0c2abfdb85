// Shapes of the service's JSON responses (see docs/api.md).

export type WslLabel = "Winner" | "Stabilizer" | "Loser";

export interface EyeSummary {
  examinations: number;
  treatments: number;
  oct_scans: number;
}

export interface PatientSummary {
  pseudo_id: string;
  sex: string;
  birth_year: number;
  diseases: string[];
  eyes: Record<string, EyeSummary>;
}

export interface PatientPage {
  total: number;
  page: number;
  size: number;
  models: string[];
  patients: PatientSummary[];
}

export interface VaPoint {
  index: number;
  date: string;
  decimal: number;
  logmar: number;
}

export interface TreatmentEntry {
  date: string;
  medication: string;
  source: string;
}

export interface DiagnosisEntry {
  date: string;
  text: string;
  flags: Record<string, boolean>;
}

export interface BiomarkerState {
  label: string;
  provenance: string | null;
  confidence: number | null;
}

export interface OctEntry {
  date: string;
  scan_id: string;
  biomarkers: Record<string, BiomarkerState>;
}

export interface Timeline {
  patient: string;
  eye: string;
  sex: string;
  birth_year: number;
  total_examinations: number;
  upto: number | null;
  va: VaPoint[];
  treatments: TreatmentEntry[];
  diagnoses: DiagnosisEntry[];
  oct: OctEntry[];
}

export interface PredictionResult {
  patient: string;
  eye: string;
  index: number;
  model: string;
  label: WslLabel;
  predicted_va_decimal: number | null;
  delta_va: number | null;
  target_date: string | null;
}

export interface StoredAnnotation {
  id: number;
  timestamp: string;
  annotator: string;
  patient: string;
  eye: string;
  index: number;
  label: WslLabel;
  va_decimal: number | null;
  note: string | null;
}
