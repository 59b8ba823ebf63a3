import type { Scene } from "./types.js";

export type StreamStatus = "connecting" | "live" | "reconnecting";

export interface StreamHandle {
  close: () => void;
}

// the subset of EventSource the stream needs; any-typed events keep the
// concrete browser EventSource assignable under strictFunctionTypes
export interface EventSourceLike {
  onopen: ((ev: any) => any) | null;
  onmessage: ((ev: any) => any) | null;
  onerror: ((ev: any) => any) | null;
  close(): void;
}

/**
 * Subscribe to the scene SSE stream. The browser's EventSource retries on
 * its own; we surface the status so the UI can show a reconnect banner.
 */
export function connectSceneStream(
  url: string,
  onScene: (scene: Scene) => void,
  onStatus: (status: StreamStatus) => void,
  factory: (url: string) => EventSourceLike = (u) => new EventSource(u),
): StreamHandle {
  onStatus("connecting");
  const source = factory(url);
  source.onopen = () => onStatus("live");
  source.onmessage = (event: { data: string }) => {
    onScene(JSON.parse(event.data) as Scene);
  };
  source.onerror = () => onStatus("reconnecting");
  return { close: () => source.close() };
}
