// Shapes of the review-service API payloads, mirroring the JSONL records
// served by `cotref serve-review`.

export type Xyxy = [number, number, number, number];

export interface NounRecord {
  text: string;
  span_start: number; // token index, inclusive
  span_end: number; // token index, exclusive
  hop_level: number; // internal convention: target = 0
}

export interface ParsedRecord {
  expression_id: string;
  nouns: NounRecord[];
  target_indices: number[];
  l_max_internal: number;
  l_max_reported: number;
}

export interface ExpressionRecord {
  id: string;
  image_id: string;
  image_width: number;
  image_height: number;
  text: string;
  tokens: string[];
  split: string;
  image_uri: string | null;
  gt_box: number[] | null;
}

export type SlotKind = "anchor" | "target";

export interface CotRecord {
  answer_text: string;
  slots: [number, SlotKind][]; // [noun index, kind] in reasoning order
}

export interface SampleRecord {
  expression: ExpressionRecord;
  parsed: ParsedRecord | null;
  cot: CotRecord | null;
  boxes: number[][] | null; // pixel xyxy, indexed by noun index
  confidences: number[] | null;
  judge_verdicts: string[] | null;
  target_iou_gt: number | null;
  status: string;
  review_status: string; // pending | accepted | rejected | failed_*
  image_url?: string;
}

export interface DecisionBody {
  decision: "accept" | "reject";
  reviewer: string;
  reason?: string | null;
}

export interface DecisionEntry {
  seq: number;
  sample_id: string;
  decision: string;
  reviewer: string;
  reason: string | null;
}

export interface ProgressReport {
  total: number;
  counts: Record<string, number>;
  decisions_logged: number;
}
