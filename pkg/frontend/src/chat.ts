import type { QueryError, QueryResult } from "./types.js";

export type PostQuery = (body: {
  question: string;
  ego_id: string | null;
  scene_id: number | null;
}) => Promise<QueryResult>;

export interface ChatEntry {
  readonly seq: number;
  readonly question: string;
  readonly status: "pending" | "answered" | "error";
  readonly result?: QueryResult;
  readonly errorStage?: string;
  readonly errorDetail?: string;
  /** the scene the answer refers to, pinned at submit time */
  readonly sceneId?: number;
}

export class QueryFailure extends Error {
  stage?: string;

  constructor(detail: string, stage?: string) {
    super(detail);
    this.stage = stage;
  }
}

/**
 * Chat state: entries are immutable once answered; answers pin the scene id
 * they were computed against, so highlights stay meaningful while the map
 * keeps advancing.
 */
export class ChatLog {
  entries: ChatEntry[] = [];
  private seq = 0;

  async submit(question: string, egoId: string | null, sceneId: number | null, post: PostQuery): Promise<ChatEntry> {
    if (question.trim().length === 0) {
      throw new Error("empty question");
    }
    const seq = this.seq++;
    this.entries = [...this.entries, { seq, question, status: "pending" }];
    let entry: ChatEntry;
    try {
      const result = await post({ question, ego_id: egoId, scene_id: sceneId });
      entry = Object.freeze({ seq, question, status: "answered" as const, result, sceneId: result.scene_id });
    } catch (err) {
      const failure = err instanceof QueryFailure ? err : new QueryFailure(String(err));
      entry = Object.freeze({
        seq,
        question,
        status: "error" as const,
        errorStage: failure.stage,
        errorDetail: failure.message,
      });
    }
    this.entries = this.entries.map((e) => (e.seq === seq ? entry : e));
    return entry;
  }

  lastAnswered(): ChatEntry | null {
    for (let i = this.entries.length - 1; i >= 0; i--) {
      if (this.entries[i].status === "answered") {
        return this.entries[i];
      }
    }
    return null;
  }
}

/** Vehicles to highlight on the map: exactly the matched ids of the answer. */
export function highlightsFor(entry: ChatEntry | null): Set<string> {
  if (entry === null || entry.status !== "answered" || !entry.result) {
    return new Set();
  }
  return new Set(entry.result.numeric.matched_ids);
}

export async function postQueryHttp(
  baseUrl: string,
  body: { question: string; ego_id: string | null; scene_id: number | null },
  fetchFn: typeof fetch = fetch,
): Promise<QueryResult> {
  const resp = await fetchFn(`${baseUrl}/query`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!resp.ok) {
    let stage: string | undefined;
    let detail = `HTTP ${resp.status}`;
    try {
      const err = (await resp.json()) as QueryError;
      stage = err.stage;
      detail = err.detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new QueryFailure(detail, stage);
  }
  return (await resp.json()) as QueryResult;
}
