import { slotColor } from "./colors.js";
import type { SampleRecord, SlotKind, Xyxy } from "./types.js";

export interface OverlayBox {
  slot: number; // position in reasoning order (cot slot index)
  nounIndex: number; // index into parsed.nouns / boxes
  kind: SlotKind;
  label: string; // the noun text
  hopLevel: number; // reported convention (internal + 1)
  box: Xyxy; // pixel coordinates, straight from the record
  color: string;
}

export interface TextSegment {
  text: string;
  color: string | null; // null for un-highlighted text
  slot: number | null;
}

export interface ReviewCard {
  id: string;
  split: string;
  status: string;
  reviewStatus: string;
  imageUrl: string | null;
  imageWidth: number;
  imageHeight: number;
  originalText: string;
  answerText: string;
  overlays: OverlayBox[];
  originalSegments: TextSegment[];
  answerSegments: TextSegment[];
  hopLevels: number[]; // reported, one per slot in reasoning order
  lMaxReported: number;
  hopBucket: string;
  targetIouGt: number | null;
  raw: SampleRecord;
}

/** Strata bucket for a reported max hop level: "1".."4" or "5plus". */
export function hopBucket(lMaxReported: number): string {
  return lMaxReported >= 5 ? "5plus" : String(lMaxReported);
}

function buildOverlays(sample: SampleRecord): OverlayBox[] {
  const parsed = sample.parsed;
  const cot = sample.cot;
  const boxes = sample.boxes;
  if (!parsed || !cot || !boxes) return [];
  const id = sample.expression.id;
  return cot.slots.map(([nounIndex, kind], slot) => {
    const noun = parsed.nouns[nounIndex];
    const b = boxes[nounIndex];
    return {
      slot,
      nounIndex,
      kind,
      label: noun.text,
      hopLevel: noun.hop_level + 1,
      box: [b[0], b[1], b[2], b[3]] as Xyxy,
      color: slotColor(id, slot),
    };
  });
}

/** Highlight the original expression: each token belonging to a slot's noun
 * span gets that slot's color; runs of same-slot tokens merge. */
function buildOriginalSegments(
  sample: SampleRecord,
  overlays: OverlayBox[],
): TextSegment[] {
  const tokens = sample.expression.tokens;
  const slotOfToken: (number | null)[] = tokens.map(() => null);
  const parsed = sample.parsed;
  if (parsed) {
    for (const o of overlays) {
      const noun = parsed.nouns[o.nounIndex];
      for (let t = noun.span_start; t < noun.span_end; t++) {
        slotOfToken[t] = o.slot;
      }
    }
  }
  const segments: TextSegment[] = [];
  let i = 0;
  while (i < tokens.length) {
    const slot = slotOfToken[i];
    let j = i + 1;
    while (j < tokens.length && slotOfToken[j] === slot) j++;
    segments.push({
      text: tokens.slice(i, j).join(" "),
      color: slot === null ? null : overlays[slot].color,
      slot,
    });
    i = j;
  }
  return segments;
}

/** Highlight noun mentions in the rewritten answer text. Slots appear in
 * reasoning order in the answer, so a single forward scan finds each noun
 * exactly once, with the same slot -> color mapping as the overlays. */
function buildAnswerSegments(
  answer: string,
  overlays: OverlayBox[],
): TextSegment[] {
  const segments: TextSegment[] = [];
  let cursor = 0;
  for (const o of overlays) {
    const at = answer.indexOf(o.label, cursor);
    if (at < 0) continue;
    if (at > cursor) {
      segments.push({ text: answer.slice(cursor, at), color: null, slot: null });
    }
    segments.push({ text: o.label, color: o.color, slot: o.slot });
    cursor = at + o.label.length;
  }
  if (cursor < answer.length) {
    segments.push({ text: answer.slice(cursor), color: null, slot: null });
  }
  return segments;
}

export function toReviewCard(sample: SampleRecord): ReviewCard {
  const overlays = buildOverlays(sample);
  const answerText = sample.cot?.answer_text ?? "";
  return {
    id: sample.expression.id,
    split: sample.expression.split,
    status: sample.status,
    reviewStatus: sample.review_status,
    imageUrl: sample.image_url ?? null,
    imageWidth: sample.expression.image_width,
    imageHeight: sample.expression.image_height,
    originalText: sample.expression.text,
    answerText,
    overlays,
    originalSegments: buildOriginalSegments(sample, overlays),
    answerSegments: buildAnswerSegments(answerText, overlays),
    hopLevels: overlays.map((o) => o.hopLevel),
    lMaxReported: sample.parsed?.l_max_reported ?? 0,
    hopBucket: hopBucket(sample.parsed?.l_max_reported ?? 0),
    targetIouGt: sample.target_iou_gt,
    raw: sample,
  };
}
