/** Wire types mirrored from the review service API (docs/api.md). */

export interface Rle {
  size: [number, number]; // [height, width]
  counts: number[];
}

export interface QaItem {
  question: string;
  answer: string;
  target_ids: string[];
}

export interface RecordSummary {
  record_id: string;
  sample_id: string;
  state: string;
  version: number;
  assignments: Record<string, string>;
  qa_count: number;
  issue_count: number;
}

export interface MaskEntry {
  visible_rle: Rle;
  amodal_rle: Rle;
  category: string;
}

export interface HistoryEvent {
  actor: string;
  action: string;
  timestamp: number;
  data: Record<string, unknown>;
}

export interface RecordView {
  record_id: string;
  sample_id: string;
  state: string;
  version: number;
  assignments: Record<string, string>;
  approvals: string[];
  revisers: string[];
  dispute_count: number;
  revision_count: number;
  payload: {
    qa_items: QaItem[];
    issues?: { code: string; message: string; item_index: number | null }[];
    objects?: Record<string, { category: string }>;
  };
  history: HistoryEvent[];
  image_url: string;
  masks?: Record<string, MaskEntry>;
}

export type ErrorCode = "conflict" | "policy" | "validation" | "not_found";

export interface ErrorBody {
  code: ErrorCode;
  message: string;
}

export interface OverlayToggles {
  visible: boolean;
  amodal: boolean;
  occluded: boolean; // the amodal-minus-visible difference layer
}
