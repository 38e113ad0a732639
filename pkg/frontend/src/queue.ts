import type { DecisionBody } from "./types.js";

// Offline decision queue. Decisions made while the server is unreachable are
// persisted and replayed in order on reconnect. Each queued decision carries a
// client-generated key; delivered keys are remembered, so a replay that races
// another flush (or a reload mid-flush) never posts the same decision twice.

export interface PendingDecision {
  key: string;
  sampleId: string;
  body: DecisionBody;
}

export interface QueueStorage {
  get(name: string): string | null;
  set(name: string, value: string): void;
}

export function memoryStorage(): QueueStorage {
  const data = new Map<string, string>();
  return {
    get: (name) => data.get(name) ?? null,
    set: (name, value) => {
      data.set(name, value);
    },
  };
}

export interface FlushResult {
  delivered: number;
  remaining: number;
}

const ITEMS_KEY = "cotref.pendingDecisions";
const DELIVERED_KEY = "cotref.deliveredKeys";

export type PostFn = (sampleId: string, body: DecisionBody) => Promise<unknown>;

export class DecisionQueue {
  private items: PendingDecision[];
  private delivered: Set<string>;
  private counter = 0;
  private flushing = false;

  constructor(
    private post: PostFn,
    private storage: QueueStorage = memoryStorage(),
  ) {
    this.items = JSON.parse(this.storage.get(ITEMS_KEY) ?? "[]");
    this.delivered = new Set(
      JSON.parse(this.storage.get(DELIVERED_KEY) ?? "[]"),
    );
  }

  get size(): number {
    return this.items.length;
  }

  enqueue(sampleId: string, body: DecisionBody): string {
    const key = `${sampleId}:${Date.now()}:${this.counter++}`;
    this.items.push({ key, sampleId, body });
    this.persist();
    return key;
  }

  /** Deliver queued decisions in order. Stops at the first failure so order
   * is preserved; already-delivered keys are skipped. */
  async flush(): Promise<FlushResult> {
    if (this.flushing) return { delivered: 0, remaining: this.items.length };
    this.flushing = true;
    let delivered = 0;
    try {
      while (this.items.length > 0) {
        const item = this.items[0];
        if (!this.delivered.has(item.key)) {
          try {
            await this.post(item.sampleId, item.body);
          } catch {
            break; // still offline (or server error); retry on next flush
          }
          this.delivered.add(item.key);
          delivered++;
        }
        this.items.shift();
        this.persist();
      }
    } finally {
      this.flushing = false;
    }
    return { delivered, remaining: this.items.length };
  }

  private persist(): void {
    this.storage.set(ITEMS_KEY, JSON.stringify(this.items));
    this.storage.set(DELIVERED_KEY, JSON.stringify([...this.delivered]));
  }
}
