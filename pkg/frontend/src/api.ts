/** Typed client for the review service's JSON API. */

export type CriterionId =
  | "illumination_removal"
  | "content_preservation"
  | "contrast"
  | "color_accuracy";

export type Criteria = Record<CriterionId, boolean>;

export type Verdict = "accept" | "discard";

export interface ManifestEntry {
  id: string;
  engines: string[];
}

export interface ManifestResponse {
  entries: ManifestEntry[];
  engines: string[];
}

export interface JudgmentPayload {
  entry: string;
  engine: string;
  criteria: Criteria;
  verdict: Verdict;
  note: string;
}

export interface JudgmentRecord extends JudgmentPayload {
  record: number;
  timestamp: string;
}

/** One metric score for one rendition; infinities arrive as strings. */
export interface ScoreRow {
  engine: string;
  metric: string;
  value: number | "inf" | "-inf" | null;
  error: string | null;
}

export interface Progress {
  total_pairs: number;
  reviewed: number;
  accepted: number;
  discarded: number;
}

/** Either a named source raster or one engine's rendition. */
export type ImageRole = "raw" | "reference" | "white" | { engine: string };

/** Server-side rejection (4xx/5xx) with the service's error message. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  imageUrl(entry: string, role: ImageRole): string {
    const tail =
      typeof role === "string"
        ? role
        : `enhanced/${encodeURIComponent(role.engine)}`;
    return `${this.baseUrl}/api/image/${encodeURIComponent(entry)}/${tail}`;
  }

  async manifest(): Promise<ManifestResponse> {
    return this.getJson<ManifestResponse>("/api/manifest");
  }

  async scores(entry: string): Promise<ScoreRow[]> {
    const body = await this.getJson<{ scores: ScoreRow[] }>(
      `/api/scores/${encodeURIComponent(entry)}`,
    );
    return body.scores;
  }

  async judgments(): Promise<JudgmentRecord[]> {
    const body = await this.getJson<{ judgments: JudgmentRecord[] }>(
      "/api/judgments",
    );
    return body.judgments;
  }

  async history(entry: string, engine: string): Promise<JudgmentRecord[]> {
    const body = await this.getJson<{ history: JudgmentRecord[] }>(
      `/api/judgments/${encodeURIComponent(entry)}/${encodeURIComponent(engine)}/history`,
    );
    return body.history;
  }

  async progress(): Promise<Progress> {
    return this.getJson<Progress>("/api/progress");
  }

  /** POST one judgment; resolves to the appended record id. */
  async postJudgment(payload: JudgmentPayload): Promise<number> {
    const response = await this.fetchFn(`${this.baseUrl}/api/judgments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    const body = await this.decode<{ record: number }>(response);
    return body.record;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    return this.decode<T>(response);
  }

  private async decode<T>(response: Response): Promise<T> {
    if (!response.ok) {
      let message = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { error?: string };
        if (body && typeof body.error === "string") message = body.error;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, message);
    }
    return (await response.json()) as T;
  }
}

/**
 * Orders judgment delivery and survives server hiccups.
 *
 * Network-level failures park the payload for a later flush; server-side
 * rejections (ApiError) are permanent for that payload and propagate to
 * the caller instead of clogging the queue.
 */
export class RetryQueue {
  readonly pending: JudgmentPayload[] = [];

  constructor(private readonly send: (p: JudgmentPayload) => Promise<number>) {}

  /** Resolves to the record id, or null when the judgment was queued. */
  async submit(payload: JudgmentPayload): Promise<number | null> {
    // earlier judgments go first so the log replays in review order
    if (this.pending.length > 0) await this.flush();
    if (this.pending.length > 0) {
      this.pending.push(payload);
      return null;
    }
    try {
      return await this.send(payload);
    } catch (err) {
      if (err instanceof ApiError) throw err;
      this.pending.push(payload);
      return null;
    }
  }

  /** Retry pending judgments in order; stops at the first network failure. */
  async flush(): Promise<number[]> {
    const delivered: number[] = [];
    while (this.pending.length > 0) {
      const head = this.pending[0];
      try {
        delivered.push(await this.send(head));
      } catch (err) {
        if (err instanceof ApiError) {
          // the server examined and refused it; drop and keep going
          this.pending.shift();
          continue;
        }
        break;
      }
      this.pending.shift();
    }
    return delivered;
  }
}
