import type {
  DecisionBody,
  DecisionEntry,
  ProgressReport,
  SampleRecord,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** The server answered with a non-2xx status (as opposed to a network
 * failure, which surfaces as whatever the fetch implementation throws). */
export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ReviewApi {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private token?: string,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const headers: Record<string, string> = {
      ...((init?.headers as Record<string, string>) ?? {}),
    };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const res = await this.fetchFn(this.base + path, { ...init, headers });
    if (!res.ok) {
      let detail = `${res.status}`;
      try {
        const body = await res.json();
        if (body && typeof body.detail === "string") detail = body.detail;
        else detail = JSON.stringify(body);
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(res.status, detail);
    }
    return res;
  }

  async listSamples(
    status: string = "pending",
    limit: number = 500,
  ): Promise<SampleRecord[]> {
    const q = `?status=${encodeURIComponent(status)}&limit=${limit}`;
    const res = await this.request(`/api/samples${q}`);
    return (await res.json()) as SampleRecord[];
  }

  async getSample(id: string): Promise<SampleRecord> {
    const res = await this.request(`/api/samples/${encodeURIComponent(id)}`);
    return (await res.json()) as SampleRecord;
  }

  async postDecision(id: string, body: DecisionBody): Promise<DecisionEntry> {
    const res = await this.request(
      `/api/samples/${encodeURIComponent(id)}/decision`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
    return (await res.json()) as DecisionEntry;
  }

  async exportBenchmark(): Promise<string> {
    const res = await this.request("/api/export");
    return await res.text();
  }

  async progress(): Promise<ProgressReport> {
    const res = await this.request("/api/progress");
    return (await res.json()) as ProgressReport;
  }
}
