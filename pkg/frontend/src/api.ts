/**
 * Typed client for the review service. Every mutation carries the version
 * token and the annotator header; server error payloads surface as ApiError
 * with their machine-readable code.
 */
import type { ErrorBody, ErrorCode, QaItem, RecordSummary, RecordView } from "./types.js";

export class ApiError extends Error {
  code: ErrorCode;

  constructor(code: ErrorCode, message: string) {
    super(message);
    this.code = code;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  private fetchFn: FetchLike;
  readonly annotator: string;
  readonly base: string;

  constructor(annotator: string, base = "", fetchFn: FetchLike = (i, n) => fetch(i, n)) {
    this.annotator = annotator;
    this.base = base;
    this.fetchFn = fetchFn;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, {
      ...init,
      headers: {
        "Content-Type": "application/json",
        "X-Annotator": this.annotator,
        ...(init?.headers ?? {}),
      },
    });
    const body = await resp.json();
    if (!resp.ok) {
      const err = body as ErrorBody;
      throw new ApiError(err.code ?? "not_found", err.message ?? `HTTP ${resp.status}`);
    }
    return body as T;
  }

  listRecords(state?: string): Promise<{ records: RecordSummary[] }> {
    const query = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request(`/records${query}`);
  }

  getRecord(id: string): Promise<RecordView> {
    return this.request(`/records/${encodeURIComponent(id)}`);
  }

  claim(id: string, version: number): Promise<RecordView> {
    return this.request(`/records/${encodeURIComponent(id)}/claim`, {
      method: "POST",
      body: JSON.stringify({ version }),
    });
  }

  approve(id: string, version: number): Promise<RecordView> {
    return this.request(`/records/${encodeURIComponent(id)}/review`, {
      method: "POST",
      body: JSON.stringify({ version, decision: "approve" }),
    });
  }

  revise(id: string, version: number, items: QaItem[]): Promise<RecordView> {
    return this.request(`/records/${encodeURIComponent(id)}/review`, {
      method: "POST",
      body: JSON.stringify({ version, decision: "revise", items }),
    });
  }

  crossCheck(id: string, version: number, verdict: "approve" | "dispute", reason?: string): Promise<RecordView> {
    return this.request(`/records/${encodeURIComponent(id)}/cross-check`, {
      method: "POST",
      body: JSON.stringify({ version, verdict, reason }),
    });
  }
}
