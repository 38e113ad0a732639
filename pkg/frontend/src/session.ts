import { ApiError } from "./api.js";
import { DecisionQueue } from "./queue.js";
import { toReviewCard, type ReviewCard } from "./reviewCard.js";
import type {
  DecisionBody,
  DecisionEntry,
  ProgressReport,
  SampleRecord,
} from "./types.js";

/** The slice of the review API the session needs (ReviewApi satisfies it). */
export interface ReviewApiLike {
  listSamples(status?: string, limit?: number): Promise<SampleRecord[]>;
  getSample(id: string): Promise<SampleRecord>;
  postDecision(id: string, body: DecisionBody): Promise<DecisionEntry>;
  progress(): Promise<ProgressReport>;
}

export interface Filters {
  hopBucket?: string; // "1".."4" | "5plus"
  split?: string; // train | val | test
}

export function applyFilters(cards: ReviewCard[], f: Filters): ReviewCard[] {
  return cards.filter(
    (c) =>
      (!f.hopBucket || c.hopBucket === f.hopBucket) &&
      (!f.split || c.split === f.split),
  );
}

export type DecideOutcome =
  | { ok: true; delivery: "sent" | "queued" }
  | { ok: false; error: string; conflict?: boolean };

/** Keyboard-driven review loop over the pending queue: accept, reject with a
 * required reason, skip, undo-last. Decisions only ever touch the decision
 * log endpoint; parse and box data are never modified. */
export class ReviewSession {
  cards: ReviewCard[] = [];
  index = 0;
  reviewer = "";
  private history: number[] = []; // indices of cards already decided

  constructor(
    private api: ReviewApiLike,
    private queue: DecisionQueue,
  ) {}

  async load(filters: Filters = {}): Promise<number> {
    const samples = await this.api.listSamples("pending");
    this.cards = applyFilters(samples.map(toReviewCard), filters);
    this.index = 0;
    this.history = [];
    return this.cards.length;
  }

  current(): ReviewCard | null {
    return this.index < this.cards.length ? this.cards[this.index] : null;
  }

  get remaining(): number {
    return Math.max(this.cards.length - this.index, 0);
  }

  get queuedCount(): number {
    return this.queue.size;
  }

  async accept(): Promise<DecideOutcome> {
    return this.decide({ decision: "accept", reviewer: this.reviewer });
  }

  async reject(reason: string): Promise<DecideOutcome> {
    if (!reason.trim()) {
      return { ok: false, error: "a rejection requires a reason" };
    }
    return this.decide({
      decision: "reject",
      reviewer: this.reviewer,
      reason,
    });
  }

  skip(): boolean {
    if (!this.current()) return false;
    this.index++;
    return true;
  }

  /** Step back to the most recently decided card so a superseding decision
   * can be posted (the log is latest-wins; nothing is deleted). */
  async undo(): Promise<boolean> {
    const last = this.history.pop();
    if (last === undefined) return false;
    this.index = last;
    await this.refreshCurrent();
    return true;
  }

  async refreshCurrent(): Promise<void> {
    const card = this.current();
    if (!card) return;
    try {
      const fresh = await this.api.getSample(card.id);
      this.cards[this.index] = toReviewCard(fresh);
    } catch {
      /* offline: keep the cached card */
    }
  }

  async flushQueue(): Promise<number> {
    const result = await this.queue.flush();
    return result.delivered;
  }

  async progress(): Promise<ProgressReport> {
    return this.api.progress();
  }

  private async decide(body: DecisionBody): Promise<DecideOutcome> {
    const card = this.current();
    if (!card) return { ok: false, error: "no sample under review" };
    if (!this.reviewer.trim()) {
      return { ok: false, error: "reviewer name required" };
    }

    // Conflict check: the sample was decided behind our back if the server
    // state differs from what this card currently shows. (After an undo the
    // card already shows our own decision, so superseding it is not a
    // conflict.)
    let online = true;
    try {
      const fresh = await this.api.getSample(card.id);
      if (fresh.review_status !== card.reviewStatus) {
        this.cards[this.index] = toReviewCard(fresh);
        return {
          ok: false,
          error: `sample already ${fresh.review_status}`,
          conflict: true,
        };
      }
    } catch (e) {
      if (e instanceof ApiError) return { ok: false, error: e.message };
      online = false; // network failure: queue the decision below
    }

    let delivery: "sent" | "queued";
    if (online) {
      try {
        await this.api.postDecision(card.id, body);
        delivery = "sent";
      } catch (e) {
        if (e instanceof ApiError) return { ok: false, error: e.message };
        this.queue.enqueue(card.id, body);
        delivery = "queued";
      }
    } else {
      this.queue.enqueue(card.id, body);
      delivery = "queued";
    }

    this.history.push(this.index);
    this.index++;
    return { ok: true, delivery };
  }
}
