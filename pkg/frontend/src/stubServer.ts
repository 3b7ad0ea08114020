/**
 * In-memory stub of the review service for tests: honors version tokens,
 * emits the documented error codes, and mimics the state machine enough to
 * exercise the client (the real machine lives server-side).
 */
import type { FetchLike } from "./api.js";
import type { ErrorBody, QaItem, RecordView } from "./types.js";

export interface StubOptions {
  failNextWith?: ErrorBody & { status: number };
}

export class StubServer {
  record: RecordView;
  options: StubOptions = {};
  calls: string[] = [];

  constructor(record?: Partial<RecordView>) {
    this.record = {
      record_id: "rec-s0",
      sample_id: "s0",
      state: "generated",
      version: 1,
      assignments: {},
      approvals: [],
      revisers: [],
      dispute_count: 0,
      revision_count: 0,
      payload: {
        qa_items: [
          {
            question: "Which object is partially hidden?",
            answer: "The blue box[SEG] hides behind the red box[SEG].",
            target_ids: ["blue-box", "red-box"],
          },
        ],
        issues: [],
        objects: { "blue-box": { category: "box" }, "red-box": { category: "box" } },
      },
      history: [],
      image_url: "/assets/s0/image.png",
      masks: {},
      ...record,
    };
  }

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  fetch: FetchLike = async (input, init) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    this.calls.push(`${method} ${url}`);
    const annotator = (init?.headers as Record<string, string>)?.["X-Annotator"] ?? "";

    if (this.options.failNextWith && method === "POST") {
      const { status, ...body } = this.options.failNextWith;
      this.options.failNextWith = undefined;
      return this.json(status, body);
    }

    if (method === "GET" && url.endsWith("/records")) {
      return this.json(200, { records: [this.summary()] });
    }
    if (method === "GET" && url.includes("/records/")) {
      return this.json(200, this.record);
    }
    const body = init?.body ? JSON.parse(String(init.body)) : {};
    if (body.version !== this.record.version) {
      return this.json(409, { code: "conflict", message: "stale version" });
    }
    if (url.endsWith("/claim")) {
      this.record = {
        ...this.record,
        state: this.record.state === "revised" ? "cross_check" : "in_review",
        version: this.record.version + 1,
        assignments: {
          ...this.record.assignments,
          [this.record.state === "revised" ? "cross_check" : "review"]: annotator,
        },
      };
      return this.json(200, this.record);
    }
    if (url.endsWith("/review")) {
      if (body.decision === "approve") {
        this.record = {
          ...this.record,
          state: "cross_check",
          version: this.record.version + 1,
          approvals: [...this.record.approvals, annotator],
        };
      } else {
        this.record = {
          ...this.record,
          state: "revised",
          version: this.record.version + 1,
          approvals: [],
          revisers: [annotator],
          payload: { ...this.record.payload, qa_items: body.items as QaItem[] },
        };
      }
      return this.json(200, this.record);
    }
    if (url.endsWith("/cross-check")) {
      if (body.verdict === "approve") {
        const approvals = [...this.record.approvals, annotator];
        this.record = {
          ...this.record,
          approvals,
          state: new Set(approvals).size >= 2 ? "finalized" : "cross_check",
          version: this.record.version + 1,
        };
      } else {
        this.record = {
          ...this.record,
          state: "needs_revision",
          version: this.record.version + 1,
          dispute_count: this.record.dispute_count + 1,
        };
      }
      return this.json(200, this.record);
    }
    return this.json(404, { code: "not_found", message: url });
  };

  private summary() {
    return {
      record_id: this.record.record_id,
      sample_id: this.record.sample_id,
      state: this.record.state,
      version: this.record.version,
      assignments: this.record.assignments,
      qa_count: this.record.payload.qa_items.length,
      issue_count: this.record.payload.issues?.length ?? 0,
    };
  }
}
