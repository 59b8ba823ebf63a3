import type { Scene } from "./types.js";

/**
 * Latest-only frame buffer: the stream can outpace the render loop, so
 * stale frames are dropped instead of queueing. This is what keeps the map
 * live at 5 Hz with any number of vehicles.
 */
export class FrameBuffer {
  private latest: Scene | null = null;
  received = 0;
  dropped = 0;

  push(scene: Scene): void {
    if (this.latest !== null) {
      this.dropped += 1;
    }
    this.latest = scene;
    this.received += 1;
  }

  /** Returns the newest unrendered frame, or null; never returns backlog. */
  take(): Scene | null {
    const scene = this.latest;
    this.latest = null;
    return scene;
  }

  get pending(): number {
    return this.latest === null ? 0 : 1;
  }
}

export function avIds(scene: Scene): string[] {
  return scene.objects
    .map((o) => o.id)
    .filter((id) => id.startsWith("AV"))
    .sort();
}

/** Keeps the current ego if it is still present, otherwise the first AV. */
export function pickEgo(scene: Scene, current: string | null): string | null {
  const avs = avIds(scene);
  if (current !== null && avs.includes(current)) {
    return current;
  }
  return avs.length > 0 ? avs[0] : null;
}
