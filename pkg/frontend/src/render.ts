import type { Scene, SceneObject } from "./types.js";

export interface Glyph {
  id: string;
  x: number;
  y: number;
  headingDeg: number;
  length: number;
  width: number;
  color: string;
  signal: string;
  isAv: boolean;
  isEgo: boolean;
  highlighted: boolean;
  sensor: string;
}

export interface EgoOverlay {
  cx: number;
  cy: number;
  radiusM: number;
  /** world angles (degrees clockwise from north) of the four relation-bin boundaries */
  boundaryAngles: number[];
}

export interface Transform {
  scale: number; // pixels per meter
  offsetX: number;
  offsetY: number;
}

export const QUERY_RADIUS_M = 100;

const CSS_COLORS: Record<string, string> = {
  red: "#d64545",
  yellow: "#e0b93f",
  blue: "#4576d6",
  white: "#e8e8e8",
  black: "#2b2b2b",
  green: "#3f9e52",
  gray: "#8a8a8a",
};

export function cssColor(name: string): string {
  return CSS_COLORS[name] ?? "#b07fd8";
}

/** One glyph per scene object; count always equals the scene's object count. */
export function sceneToGlyphs(scene: Scene, egoId: string | null, highlights: ReadonlySet<string>): Glyph[] {
  return scene.objects.map((o: SceneObject) => ({
    id: o.id,
    x: o.x,
    y: o.y,
    headingDeg: o.h,
    length: o.le,
    width: o.wi,
    color: o.co,
    signal: o.sg,
    isAv: o.id.startsWith("AV"),
    isEgo: o.id === egoId,
    highlighted: highlights.has(o.id),
    sensor: o.ds,
  }));
}

/** Relation-bin boundary rays rotate with the ego heading (every 90 deg from +45). */
export function quadrantAngles(headingDeg: number): number[] {
  return [45, 135, 225, 315].map((d) => (headingDeg + d) % 360);
}

export function egoOverlay(scene: Scene, egoId: string): EgoOverlay | null {
  const ego = scene.objects.find((o) => o.id === egoId);
  if (!ego) {
    return null;
  }
  return { cx: ego.x, cy: ego.y, radiusM: QUERY_RADIUS_M, boundaryAngles: quadrantAngles(ego.h) };
}

/** Fit the scene bounding box (plus margin) into the canvas; y grows north. */
export function fitTransform(scene: Scene, widthPx: number, heightPx: number, marginM = 20): Transform {
  let minX = -50, maxX = 50, minY = -50, maxY = 50;
  if (scene.objects.length > 0) {
    minX = Math.min(...scene.objects.map((o) => o.x)) - marginM;
    maxX = Math.max(...scene.objects.map((o) => o.x)) + marginM;
    minY = Math.min(...scene.objects.map((o) => o.y)) - marginM;
    maxY = Math.max(...scene.objects.map((o) => o.y)) + marginM;
  }
  const scale = Math.min(widthPx / (maxX - minX), heightPx / (maxY - minY));
  return {
    scale,
    offsetX: widthPx / 2 - scale * (minX + maxX) / 2,
    offsetY: heightPx / 2 + scale * (minY + maxY) / 2,
  };
}

export function toScreen(t: Transform, x: number, y: number): [number, number] {
  return [t.offsetX + t.scale * x, t.offsetY - t.scale * y];
}

// --- canvas drawing (thin impure layer over the pure helpers above) -------

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  scene: Scene,
  egoId: string | null,
  highlights: ReadonlySet<string>,
  widthPx: number,
  heightPx: number,
): void {
  const t = fitTransform(scene, widthPx, heightPx);
  ctx.clearRect(0, 0, widthPx, heightPx);
  ctx.fillStyle = "#11151a";
  ctx.fillRect(0, 0, widthPx, heightPx);
  const overlay = egoId ? egoOverlay(scene, egoId) : null;
  if (overlay) {
    drawOverlay(ctx, overlay, t);
  }
  for (const glyph of sceneToGlyphs(scene, egoId, highlights)) {
    drawGlyph(ctx, glyph, t);
  }
}

function drawOverlay(ctx: CanvasRenderingContext2D, overlay: EgoOverlay, t: Transform): void {
  const [cx, cy] = toScreen(t, overlay.cx, overlay.cy);
  const r = overlay.radiusM * t.scale;
  ctx.strokeStyle = "rgba(110, 170, 250, 0.5)";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.arc(cx, cy, r, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.setLineDash([6, 6]);
  for (const angle of overlay.boundaryAngles) {
    // heading angles are clockwise from north; canvas y is flipped
    const rad = (angle * Math.PI) / 180;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + r * Math.sin(rad), cy - r * Math.cos(rad));
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function drawGlyph(ctx: CanvasRenderingContext2D, glyph: Glyph, t: Transform): void {
  const [px, py] = toScreen(t, glyph.x, glyph.y);
  const lenPx = Math.max(4, glyph.length * t.scale);
  const widPx = Math.max(2, glyph.width * t.scale);
  ctx.save();
  ctx.translate(px, py);
  ctx.rotate((glyph.headingDeg * Math.PI) / 180);
  ctx.fillStyle = cssColor(glyph.color);
  ctx.fillRect(-widPx / 2, -lenPx / 2, widPx, lenPx);
  if (glyph.isEgo) {
    ctx.strokeStyle = "#6eaafa";
    ctx.lineWidth = 2;
    ctx.strokeRect(-widPx / 2 - 2, -lenPx / 2 - 2, widPx + 4, lenPx + 4);
  } else if (glyph.isAv) {
    ctx.strokeStyle = "#9fd0ff";
    ctx.lineWidth = 1;
    ctx.strokeRect(-widPx / 2 - 1, -lenPx / 2 - 1, widPx + 2, lenPx + 2);
  }
  if (glyph.highlighted) {
    ctx.strokeStyle = "#ffd24d";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(0, 0, Math.max(lenPx, widPx) * 0.9, 0, 2 * Math.PI);
    ctx.stroke();
  }
  if (glyph.signal === "left" || glyph.signal === "right") {
    ctx.fillStyle = "#ffb13d";
    const side = glyph.signal === "left" ? -1 : 1;
    ctx.fillRect(side * (widPx / 2 + 2) - 1.5, -lenPx / 2, 3, 3);
  } else if (glyph.signal === "brake") {
    ctx.fillStyle = "#ff5050";
    ctx.fillRect(-widPx / 2, lenPx / 2 - 3, widPx, 3);
  }
  ctx.restore();
  if (glyph.isAv) {
    ctx.fillStyle = "#cfe4ff";
    ctx.font = "10px sans-serif";
    ctx.fillText(glyph.id, px + widPx / 2 + 3, py - 3);
  }
}
