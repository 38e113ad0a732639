import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { DecisionQueue } from "../src/queue.js";
import { applyFilters, ReviewSession } from "../src/session.js";
import { toReviewCard } from "../src/reviewCard.js";
import type { ReviewApiLike } from "../src/session.js";
import type {
  DecisionBody,
  DecisionEntry,
  SampleRecord,
} from "../src/types.js";
import { sampleBoyGirlSkirt, sampleSingleNoun } from "./fixtures.js";

/** In-memory review service double with a switchable network. */
class FakeApi implements ReviewApiLike {
  online = true;
  decisions: { id: string; body: DecisionBody }[] = [];
  constructor(public samples: SampleRecord[]) {}

  private net(): void {
    if (!this.online) throw new TypeError("fetch failed");
  }

  async listSamples(status = "pending"): Promise<SampleRecord[]> {
    this.net();
    return this.samples.filter((s) => s.review_status === status);
  }

  async getSample(id: string): Promise<SampleRecord> {
    this.net();
    const s = this.samples.find((x) => x.expression.id === id);
    if (!s) throw new ApiError(404, `unknown sample id ${id}`);
    return s;
  }

  async postDecision(id: string, body: DecisionBody): Promise<DecisionEntry> {
    this.net();
    const s = this.samples.find((x) => x.expression.id === id);
    if (!s) throw new ApiError(404, `unknown sample id ${id}`);
    this.decisions.push({ id, body });
    s.review_status = body.decision === "accept" ? "accepted" : "rejected";
    return {
      seq: this.decisions.length,
      sample_id: id,
      decision: body.decision,
      reviewer: body.reviewer,
      reason: body.reason ?? null,
    };
  }

  async progress() {
    this.net();
    const counts: Record<string, number> = {};
    for (const s of this.samples) {
      counts[s.review_status] = (counts[s.review_status] ?? 0) + 1;
    }
    return {
      total: this.samples.length,
      counts,
      decisions_logged: this.decisions.length,
    };
  }
}

function makeSession(samples: SampleRecord[]) {
  const api = new FakeApi(samples);
  const queue = new DecisionQueue((id, body) => api.postDecision(id, body));
  const session = new ReviewSession(api, queue);
  session.reviewer = "amy";
  return { api, queue, session };
}

describe("applyFilters", () => {
  const cards = [
    toReviewCard(sampleSingleNoun("a", "train", 1)),
    toReviewCard(sampleSingleNoun("b", "val", 3)),
    toReviewCard(sampleSingleNoun("c", "val", 6)),
    toReviewCard(sampleBoyGirlSkirt()), // train, bucket 3
  ];

  it("filters by hop bucket and split, independently and together", () => {
    expect(applyFilters(cards, {}).map((c) => c.id)).toEqual([
      "a",
      "b",
      "c",
      "e03",
    ]);
    expect(applyFilters(cards, { hopBucket: "3" }).map((c) => c.id)).toEqual([
      "b",
      "e03",
    ]);
    expect(
      applyFilters(cards, { hopBucket: "5plus" }).map((c) => c.id),
    ).toEqual(["c"]);
    expect(applyFilters(cards, { split: "val" }).map((c) => c.id)).toEqual([
      "b",
      "c",
    ]);
    expect(
      applyFilters(cards, { hopBucket: "3", split: "val" }).map((c) => c.id),
    ).toEqual(["b"]);
  });
});

describe("ReviewSession", () => {
  it("loads only pending samples", async () => {
    const decided = sampleSingleNoun("done");
    decided.review_status = "accepted";
    const { session } = makeSession([sampleBoyGirlSkirt(), decided]);
    expect(await session.load()).toBe(1);
    expect(session.current()?.id).toBe("e03");
  });

  it("accept posts immediately and advances", async () => {
    const { api, session } = makeSession([
      sampleBoyGirlSkirt(),
      sampleSingleNoun("e99"),
    ]);
    await session.load();
    const out = await session.accept();
    expect(out).toEqual({ ok: true, delivery: "sent" });
    expect(api.decisions).toEqual([
      { id: "e03", body: { decision: "accept", reviewer: "amy" } },
    ]);
    expect(session.current()?.id).toBe("e99");
  });

  it("reject without a reason is rejected locally, nothing is posted", async () => {
    const { api, session } = makeSession([sampleBoyGirlSkirt()]);
    await session.load();
    const out = await session.reject("   ");
    expect(out.ok).toBe(false);
    if (!out.ok) expect(out.error).toMatch(/reason/);
    expect(api.decisions).toHaveLength(0);
    expect(session.current()?.id).toBe("e03"); // still on the same card
  });

  it("reject with a reason posts decision, reviewer and reason", async () => {
    const { api, session } = makeSession([sampleBoyGirlSkirt()]);
    await session.load();
    const out = await session.reject("box misses the skirt");
    expect(out).toEqual({ ok: true, delivery: "sent" });
    expect(api.decisions[0].body).toEqual({
      decision: "reject",
      reviewer: "amy",
      reason: "box misses the skirt",
    });
  });

  it("requires a reviewer name before any decision", async () => {
    const { api, session } = makeSession([sampleBoyGirlSkirt()]);
    session.reviewer = "  ";
    await session.load();
    const out = await session.accept();
    expect(out.ok).toBe(false);
    if (!out.ok) expect(out.error).toMatch(/reviewer/);
    expect(api.decisions).toHaveLength(0);
  });

  it("skip advances without posting", async () => {
    const { api, session } = makeSession([
      sampleBoyGirlSkirt(),
      sampleSingleNoun("e99"),
    ]);
    await session.load();
    expect(session.skip()).toBe(true);
    expect(api.decisions).toHaveLength(0);
    expect(session.current()?.id).toBe("e99");
  });

  it("undo returns to the last decided card with a refreshed view", async () => {
    const { session } = makeSession([
      sampleBoyGirlSkirt(),
      sampleSingleNoun("e99"),
    ]);
    await session.load();
    await session.accept();
    expect(session.current()?.id).toBe("e99");
    expect(await session.undo()).toBe(true);
    const card = session.current();
    expect(card?.id).toBe("e03");
    // refreshed from the server: the earlier accept is visible
    expect(card?.reviewStatus).toBe("accepted");
    expect(await session.undo()).toBe(false); // history exhausted
  });

  it("a decision after undo supersedes the first (latest-wins log)", async () => {
    const { api, session } = makeSession([sampleBoyGirlSkirt()]);
    await session.load();
    await session.accept();
    await session.undo();
    // the refreshed card is no longer pending; deciding again must not be
    // treated as someone else's conflict, so undo re-arms the card locally
    const out = await session.reject("wrong target");
    expect(out.ok).toBe(true);
    expect(api.decisions.map((d) => d.body.decision)).toEqual([
      "accept",
      "reject",
    ]);
  });

  it("offline decision is queued, then delivered exactly once on reconnect", async () => {
    const { api, queue, session } = makeSession([sampleBoyGirlSkirt()]);
    await session.load();
    api.online = false;
    const out = await session.accept();
    expect(out).toEqual({ ok: true, delivery: "queued" });
    expect(api.decisions).toHaveLength(0);
    expect(queue.size).toBe(1);

    api.online = true;
    expect(await session.flushQueue()).toBe(1);
    expect(api.decisions).toHaveLength(1);
    expect(await session.flushQueue()).toBe(0); // no double delivery
    expect(api.decisions).toHaveLength(1);
  });

  it("surfaces a conflict and refreshes the card instead of posting", async () => {
    const { api, session } = makeSession([sampleBoyGirlSkirt()]);
    await session.load();
    // another reviewer decides the sample behind our back
    api.samples[0].review_status = "rejected";
    const out = await session.accept();
    expect(out.ok).toBe(false);
    if (!out.ok) {
      expect(out.conflict).toBe(true);
      expect(out.error).toMatch(/rejected/);
    }
    expect(api.decisions).toHaveLength(0);
    expect(session.current()?.reviewStatus).toBe("rejected");
  });

  it("progress reflects decisions made through the session", async () => {
    const { session } = makeSession([
      sampleBoyGirlSkirt(),
      sampleSingleNoun("e99"),
    ]);
    await session.load();
    await session.accept();
    const p = await session.progress();
    expect(p.total).toBe(2);
    expect(p.counts["accepted"]).toBe(1);
    expect(p.counts["pending"]).toBe(1);
    expect(p.decisions_logged).toBe(1);
  });

  it("load applies hop-bucket and split filters to the pending queue", async () => {
    const { session } = makeSession([
      sampleSingleNoun("a", "train", 3),
      sampleSingleNoun("b", "val", 3),
      sampleSingleNoun("c", "val", 5),
    ]);
    expect(await session.load({ split: "val", hopBucket: "3" })).toBe(1);
    expect(session.current()?.id).toBe("b");
  });
});
