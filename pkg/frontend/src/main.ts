import { ReviewApi } from "./api.js";
import { DecisionQueue, memoryStorage, type QueueStorage } from "./queue.js";
import { drawOverlays } from "./render.js";
import type { ReviewCard, TextSegment } from "./reviewCard.js";
import { ReviewSession, type Filters } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function browserStorage(): QueueStorage {
  try {
    const probe = "__cotref_probe__";
    window.localStorage.setItem(probe, "1");
    window.localStorage.removeItem(probe);
    return {
      get: (name) => window.localStorage.getItem(name),
      set: (name, value) => window.localStorage.setItem(name, value),
    };
  } catch {
    return memoryStorage();
  }
}

function renderSegments(target: HTMLElement, segments: TextSegment[]): void {
  target.replaceChildren();
  for (const seg of segments) {
    const span = document.createElement("span");
    span.textContent = seg.text;
    if (seg.color) {
      span.className = "hl";
      span.style.backgroundColor = seg.color;
    }
    target.appendChild(span);
    target.appendChild(document.createTextNode(" "));
  }
}

class App {
  private api = new ReviewApi("");
  private queue = new DecisionQueue(
    (id, body) => this.api.postDecision(id, body),
    browserStorage(),
  );
  private session = new ReviewSession(this.api, this.queue);

  private image = el<HTMLImageElement>("image");
  private canvas = el<HTMLCanvasElement>("overlay");
  private original = el<HTMLElement>("original-text");
  private answer = el<HTMLElement>("answer-text");
  private meta = el<HTMLElement>("meta");
  private message = el<HTMLElement>("message");
  private progressBar = el<HTMLProgressElement>("progress-bar");
  private progressText = el<HTMLElement>("progress-text");
  private queueBadge = el<HTMLElement>("queue-badge");
  private reviewerInput = el<HTMLInputElement>("reviewer");
  private reasonBox = el<HTMLElement>("reason-box");
  private reasonInput = el<HTMLInputElement>("reason");
  private hopFilter = el<HTMLSelectElement>("filter-hop");
  private splitFilter = el<HTMLSelectElement>("filter-split");

  async start(): Promise<void> {
    this.reviewerInput.addEventListener("input", () => {
      this.session.reviewer = this.reviewerInput.value;
    });
    el<HTMLButtonElement>("btn-accept").addEventListener("click", () =>
      this.accept(),
    );
    el<HTMLButtonElement>("btn-reject").addEventListener("click", () =>
      this.openReject(),
    );
    el<HTMLButtonElement>("btn-skip").addEventListener("click", () =>
      this.skip(),
    );
    el<HTMLButtonElement>("btn-undo").addEventListener("click", () =>
      this.undo(),
    );
    this.reasonInput.addEventListener("keydown", (e) => {
      if (e.key === "Enter") void this.submitReject();
      if (e.key === "Escape") this.closeReject();
      e.stopPropagation();
    });
    for (const filter of [this.hopFilter, this.splitFilter]) {
      filter.addEventListener("change", () => void this.reload());
    }
    document.addEventListener("keydown", (e) => {
      if (e.target === this.reviewerInput || e.target === this.reasonInput) {
        return;
      }
      if (e.key === "a") void this.accept();
      else if (e.key === "r") this.openReject();
      else if (e.key === "s") this.skip();
      else if (e.key === "u") void this.undo();
    });
    window.addEventListener("online", () => void this.flushQueue());
    setInterval(() => void this.flushQueue(), 15000);
    await this.reload();
  }

  private filters(): Filters {
    const f: Filters = {};
    if (this.hopFilter.value) f.hopBucket = this.hopFilter.value;
    if (this.splitFilter.value) f.split = this.splitFilter.value;
    return f;
  }

  private async reload(): Promise<void> {
    try {
      const n = await this.session.load(this.filters());
      this.say(`${n} pending samples loaded`);
    } catch (e) {
      this.say(`failed to load samples: ${String(e)}`, true);
    }
    await this.refreshProgress();
    this.renderCard();
  }

  private renderCard(): void {
    const card = this.session.current();
    this.closeReject();
    if (!card) {
      this.meta.textContent = "queue empty — nothing left to review";
      this.original.replaceChildren();
      this.answer.replaceChildren();
      this.image.removeAttribute("src");
      const ctx = this.canvas.getContext("2d");
      if (ctx) ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
      return;
    }
    this.meta.textContent =
      `${card.id} · split ${card.split} · L_max ${card.lMaxReported}` +
      ` · ${card.overlays.length} boxes · ${card.reviewStatus}`;
    renderSegments(this.original, card.originalSegments);
    renderSegments(this.answer, card.answerSegments);
    if (card.imageUrl) this.image.src = card.imageUrl;
    else this.image.removeAttribute("src");
    this.drawCanvas(card);
  }

  private drawCanvas(card: ReviewCard): void {
    // Canvas backing store at native image resolution; CSS scales the
    // viewport, so box pixel coordinates come straight from the record.
    this.canvas.width = card.imageWidth;
    this.canvas.height = card.imageHeight;
    const ctx = this.canvas.getContext("2d");
    if (ctx) drawOverlays(ctx, card, 1);
  }

  private async accept(): Promise<void> {
    this.report(await this.session.accept(), "accepted");
  }

  private openReject(): void {
    if (!this.session.current()) return;
    this.reasonBox.classList.remove("hidden");
    this.reasonInput.focus();
  }

  private closeReject(): void {
    this.reasonBox.classList.add("hidden");
    this.reasonInput.value = "";
  }

  private async submitReject(): Promise<void> {
    this.report(await this.session.reject(this.reasonInput.value), "rejected");
  }

  private skip(): void {
    if (this.session.skip()) {
      this.say("skipped");
      this.renderCard();
    }
  }

  private async undo(): Promise<void> {
    if (await this.session.undo()) {
      this.say("back on the last decided sample — decide again to supersede");
      this.renderCard();
    } else {
      this.say("nothing to undo", true);
    }
  }

  private report(
    outcome: Awaited<ReturnType<ReviewSession["accept"]>>,
    verb: string,
  ): void {
    if (outcome.ok) {
      this.say(
        outcome.delivery === "sent"
          ? `${verb}`
          : `${verb} (offline — queued for delivery)`,
      );
      this.closeReject();
      this.renderCard();
      void this.refreshProgress();
    } else {
      this.say(outcome.error, true);
      if (outcome.conflict) this.renderCard();
    }
  }

  private async flushQueue(): Promise<void> {
    const delivered = await this.session.flushQueue();
    if (delivered > 0) {
      this.say(`reconnected — ${delivered} queued decision(s) delivered`);
      await this.refreshProgress();
    }
    this.updateQueueBadge();
  }

  private async refreshProgress(): Promise<void> {
    this.updateQueueBadge();
    try {
      const p = await this.session.progress();
      const done =
        (p.counts["accepted"] ?? 0) + (p.counts["rejected"] ?? 0);
      const reviewable = done + (p.counts["pending"] ?? 0);
      this.progressBar.max = Math.max(reviewable, 1);
      this.progressBar.value = done;
      this.progressText.textContent =
        `${done}/${reviewable} reviewed · ${p.total} total · ` +
        `${p.decisions_logged} decisions logged`;
    } catch {
      this.progressText.textContent = "progress unavailable (offline)";
    }
  }

  private updateQueueBadge(): void {
    const n = this.session.queuedCount;
    this.queueBadge.textContent = n > 0 ? `${n} queued` : "";
  }

  private say(text: string, isError = false): void {
    this.message.textContent = text;
    this.message.className = isError ? "error" : "";
  }
}

new App().start().catch((e) => {
  console.error(e);
});
