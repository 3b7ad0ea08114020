/**
 * Queue-first layout: pending list on the left, record detail on the right.
 * Keyboard: a = approve, r = start revision, c = cross-check approve.
 * The service stays authoritative; this file only wires DOM to the store.
 */
import { ReviewApi } from "./api.js";
import { layersFromEntry, renderToCanvas } from "./overlay.js";
import { segCount, ViewStore } from "./state.js";
import type { RecordSummary, RecordView } from "./types.js";

const STATE_FILTERS = ["", "generated", "in_review", "needs_revision", "revised", "cross_check", "finalized", "replaced"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, cls?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  private api: ReviewApi;
  private store: ViewStore;
  private root: HTMLElement;
  private queueEl: HTMLElement;
  private detailEl: HTMLElement;
  private filter = "";

  constructor(root: HTMLElement, api: ReviewApi) {
    this.root = root;
    this.api = api;
    this.store = new ViewStore(api);
    this.queueEl = el("div", "queue");
    this.detailEl = el("div", "detail");
    const layout = el("div", "layout");
    layout.append(this.queueEl, this.detailEl);
    this.root.append(layout);
    this.store.subscribe(() => this.renderDetail());
    document.addEventListener("keydown", (ev) => this.onKey(ev));
    void this.refreshQueue();
    window.setInterval(() => void this.refreshQueue(), 15000); // read-only refresh
  }

  private onKey(ev: KeyboardEvent): void {
    if ((ev.target as HTMLElement)?.tagName === "TEXTAREA") return;
    if (ev.key === "a") void this.store.approve();
    if (ev.key === "r") this.store.startEditing();
    if (ev.key === "c") void this.store.crossCheckApprove();
  }

  async refreshQueue(): Promise<void> {
    const body = await this.api.listRecords(this.filter || undefined);
    this.renderQueue(body.records);
  }

  private renderQueue(records: RecordSummary[]): void {
    this.queueEl.replaceChildren();
    const select = el("select");
    for (const state of STATE_FILTERS) {
      const opt = el("option", undefined, state || "all states");
      opt.value = state;
      select.append(opt);
    }
    select.value = this.filter;
    select.onchange = () => {
      this.filter = select.value;
      void this.refreshQueue();
    };
    this.queueEl.append(select);
    for (const rec of records) {
      const row = el("button", "queue-row");
      row.append(
        el("span", "rid", rec.record_id),
        el("span", `badge state-${rec.state}`, rec.state),
        el("span", "meta", `${rec.qa_count} QA, ${rec.issue_count} issues`),
      );
      row.onclick = () => void this.store.load(rec.record_id);
      this.queueEl.append(row);
    }
  }

  private renderDetail(): void {
    const s = this.store.state;
    this.detailEl.replaceChildren();
    if (!s.record) {
      this.detailEl.append(el("p", "hint", "Pick a record from the queue."));
      return;
    }
    const record = s.record;

    if (s.banner) {
      const cls = s.lastError === "conflict" ? "banner conflict" : "banner error";
      this.detailEl.append(el("div", cls, s.banner));
    }

    const head = el("div", "head");
    head.append(
      el("h2", undefined, record.record_id),
      el("span", `badge state-${record.state}`, record.state),
      el("span", "version", `v${record.version}`),
    );
    this.detailEl.append(head);

    this.detailEl.append(this.renderCanvasPanel(record));
    this.detailEl.append(this.renderQaPanel());
    this.detailEl.append(this.renderActions());
    this.detailEl.append(this.renderHistory(record));
  }

  private renderCanvasPanel(record: RecordView): HTMLElement {
    const panel = el("div", "canvas-panel");
    const canvas = el("canvas");
    const toggles = el("div", "toggles");
    for (const layer of ["visible", "amodal", "occluded"] as const) {
      const label = el("label");
      const box = el("input");
      box.type = "checkbox";
      box.checked = this.store.state.toggles[layer];
      box.onchange = () => this.store.setToggle(layer, box.checked);
      label.append(box, document.createTextNode(` ${layer}`));
      toggles.append(label);
    }
    panel.append(toggles, canvas);
    const image = new Image();
    image.onload = () => {
      const entries = Object.values(record.masks ?? {});
      renderToCanvas(canvas, image, entries.map(layersFromEntry), this.store.state.toggles);
    };
    image.src = record.image_url;
    return panel;
  }

  private renderQaPanel(): HTMLElement {
    const s = this.store.state;
    const panel = el("div", "qa-panel");
    s.editBuffer.forEach((item, index) => {
      const card = el("div", "qa-card");
      const counts = el(
        "span",
        segCount(item.answer) === item.target_ids.length ? "seg-count ok" : "seg-count bad",
        `[SEG] ${segCount(item.answer)} / targets ${item.target_ids.length}`,
      );
      card.append(el("div", "q-label", `Q${index}`), counts);
      if (s.editing) {
        const q = el("textarea");
        q.value = item.question;
        q.oninput = () => this.store.updateEditItem(index, { question: q.value });
        const a = el("textarea");
        a.value = item.answer;
        a.oninput = () => {
          this.store.updateEditItem(index, { answer: a.value });
          counts.textContent = `[SEG] ${segCount(a.value)} / targets ${item.target_ids.length}`;
          counts.className =
            segCount(a.value) === item.target_ids.length ? "seg-count ok" : "seg-count bad";
        };
        card.append(q, a);
      } else {
        card.append(el("p", "question", item.question), el("p", "answer", item.answer));
      }
      card.append(el("p", "targets", `targets: ${item.target_ids.join(", ")}`));
      panel.append(card);
    });
    return panel;
  }

  private renderActions(): HTMLElement {
    const s = this.store.state;
    const bar = el("div", "actions");
    const record = s.record!;
    const me = this.api.annotator;

    const add = (label: string, enabled: boolean, fn: () => void) => {
      const btn = el("button", undefined, label);
      btn.disabled = !enabled || s.pending;
      btn.onclick = fn;
      bar.append(btn);
    };

    add("claim", this.store.canClaim(), () => void this.store.claim());
    const reviewing = record.state === "in_review" && record.assignments["review"] === me;
    add("approve (a)", reviewing, () => void this.store.approve());
    if (s.editing) {
      add("submit revision", reviewing && this.store.editsValid(), () => void this.store.submitRevision());
    } else {
      add("revise (r)", reviewing, () => this.store.startEditing());
    }
    add("cross-check approve (c)", this.store.canCrossCheck(), () => void this.store.crossCheckApprove());
    add("dispute", this.store.canCrossCheck(), () => {
      const reason = window.prompt("Dispute reason:");
      if (reason) void this.store.crossCheckDispute(reason);
    });
    if (s.pending) bar.append(el("span", "pending", "working..."));
    return bar;
  }

  private renderHistory(record: RecordView): HTMLElement {
    const panel = el("details", "history");
    panel.append(el("summary", undefined, `history (${record.history.length})`));
    for (const event of record.history) {
      const line = el("div", "event", `${event.actor} ${event.action}`);
      if (event.action === "revised" && event.data["diff"]) {
        const diff = event.data["diff"] as { before: unknown; after: unknown };
        const pre = el("pre", "diff");
        pre.textContent =
          `before: ${JSON.stringify(diff.before, null, 1)}\nafter:  ${JSON.stringify(diff.after, null, 1)}`;
        line.append(pre);
      }
      panel.append(line);
    }
    return panel;
  }
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get("annotator") ?? window.prompt("Annotator id:") ?? "anonymous";
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app root");
  new App(root, new ReviewApi(annotator));
}
