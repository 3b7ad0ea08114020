/**
 * View state for the record detail screen.
 *
 * Holds the current record, overlay toggles, the QA edit buffer, the
 * pending-request flag, and the last error code. Enforces the client-side
 * rules the service would reject anyway: live [SEG]-count validation of the
 * edit buffer, no self-cross-check, and at most one in-flight mutation per
 * record. A stale-version conflict raises the conflict banner and refetches
 * the record; it never overwrites silently.
 */
import { ApiError, ReviewApi } from "./api.js";
import type { ErrorCode, OverlayToggles, QaItem, RecordView } from "./types.js";

export const SEG_MARKER = "[SEG]";

export function segCount(text: string): number {
  return text.split(SEG_MARKER).length - 1;
}

export interface EditBufferItem {
  question: string;
  answer: string;
  target_ids: string[];
}

export interface EditValidation {
  index: number;
  segCount: number;
  targetCount: number;
  ok: boolean;
}

export interface ViewState {
  record: RecordView | null;
  toggles: OverlayToggles;
  editBuffer: EditBufferItem[];
  editing: boolean;
  pending: boolean;
  lastError: ErrorCode | null;
  banner: string | null;
  conflict: boolean; // stale version seen; the record shown was refetched
}

type Listener = (state: ViewState) => void;

export class ViewStore {
  private api: ReviewApi;
  private listeners: Listener[] = [];
  state: ViewState = {
    record: null,
    toggles: { visible: true, amodal: false, occluded: true },
    editBuffer: [],
    editing: false,
    pending: false,
    lastError: null,
    banner: null,
    conflict: false,
  };

  constructor(api: ReviewApi) {
    this.api = api;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const l of this.listeners) l(this.state);
  }

  private set(partial: Partial<ViewState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  async load(recordId: string): Promise<void> {
    const record = await this.api.getRecord(recordId);
    this.set({
      record,
      editBuffer: record.payload.qa_items.map((it) => ({ ...it, target_ids: [...it.target_ids] })),
      editing: false,
      lastError: null,
      banner: null,
      conflict: false,
    });
  }

  setToggle(layer: keyof OverlayToggles, on: boolean): void {
    this.set({ toggles: { ...this.state.toggles, [layer]: on } });
  }

  startEditing(): void {
    this.set({ editing: true });
  }

  updateEditItem(index: number, patch: Partial<EditBufferItem>): void {
    const buffer = this.state.editBuffer.map((it, i) => (i === index ? { ...it, ...patch } : it));
    this.set({ editBuffer: buffer });
  }

  /** Live [SEG]-count check per edit item; mismatches disable submission. */
  validateEdits(): EditValidation[] {
    return this.state.editBuffer.map((item, index) => {
      const n = segCount(item.answer);
      return {
        index,
        segCount: n,
        targetCount: item.target_ids.length,
        ok: n === item.target_ids.length && item.question.trim() !== "" && item.answer.trim() !== "",
      };
    });
  }

  editsValid(): boolean {
    return this.validateEdits().every((v) => v.ok);
  }

  /** The annotator may not cross-check a cycle they approved or revised. */
  canCrossCheck(): boolean {
    const record = this.state.record;
    if (!record || record.state !== "cross_check") return false;
    const me = this.api.annotator;
    if (record.approvals.includes(me) || record.revisers.includes(me)) return false;
    const assignee = record.assignments["cross_check"];
    return assignee === undefined || assignee === me;
  }

  canClaim(): boolean {
    const record = this.state.record;
    if (!record) return false;
    if (!["generated", "needs_revision", "revised"].includes(record.state)) return false;
    if (record.state === "revised" && record.revisers.includes(this.api.annotator)) return false;
    return true;
  }

  private async mutate(action: (record: RecordView) => Promise<RecordView>): Promise<void> {
    const record = this.state.record;
    if (!record) return;
    if (this.state.pending) return; // one in-flight mutation per record
    this.set({ pending: true, lastError: null, banner: null });
    try {
      const updated = await action(record);
      this.set({
        record: updated,
        editBuffer: updated.payload.qa_items.map((it) => ({ ...it, target_ids: [...it.target_ids] })),
        editing: false,
        pending: false,
        conflict: false,
      });
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.code === "conflict") {
          // stale version: surface the banner and refetch, never overwrite
          const fresh = await this.api.getRecord(record.record_id);
          this.set({
            pending: false,
            lastError: "conflict",
            conflict: true,
            banner: "Record changed elsewhere; showing the latest version.",
            record: fresh,
            editBuffer: fresh.payload.qa_items.map((it) => ({ ...it, target_ids: [...it.target_ids] })),
          });
          return;
        }
        this.set({ pending: false, lastError: err.code, banner: err.message });
        return;
      }
      this.set({ pending: false, lastError: null, banner: String(err) });
    }
  }

  claim(): Promise<void> {
    return this.mutate((r) => this.api.claim(r.record_id, r.version));
  }

  approve(): Promise<void> {
    return this.mutate((r) => this.api.approve(r.record_id, r.version));
  }

  submitRevision(): Promise<void> {
    if (!this.editsValid()) {
      this.set({ lastError: "validation", banner: "Fix the [SEG]/target mismatches before submitting." });
      return Promise.resolve();
    }
    const items: QaItem[] = this.state.editBuffer.map((it) => ({
      question: it.question,
      answer: it.answer,
      target_ids: [...it.target_ids],
    }));
    return this.mutate((r) => this.api.revise(r.record_id, r.version, items));
  }

  crossCheckApprove(): Promise<void> {
    if (!this.canCrossCheck()) {
      this.set({ lastError: "policy", banner: "You cannot cross-check this cycle." });
      return Promise.resolve();
    }
    return this.mutate((r) => this.api.crossCheck(r.record_id, r.version, "approve"));
  }

  crossCheckDispute(reason: string): Promise<void> {
    if (!this.canCrossCheck()) {
      this.set({ lastError: "policy", banner: "You cannot cross-check this cycle." });
      return Promise.resolve();
    }
    return this.mutate((r) => this.api.crossCheck(r.record_id, r.version, "dispute", reason));
  }
}
