import type { Scene, SceneObject, QueryResult } from "../src/types.js";

export function obj(overrides: Partial<SceneObject> & { id: string }): SceneObject {
  return {
    ts: 1.0,
    x: 0,
    y: 0,
    s: 10,
    lat: 0,
    v: 10,
    a: 0,
    h: 0,
    le: 4.5,
    wi: 1.8,
    he: 1.5,
    ty: "car",
    co: "red",
    ln: "R1_1",
    lx: 1,
    rd: "R1",
    sg: "none",
    ds: "AV001",
    ...overrides,
  };
}

export function scene(sceneId: number, objects: SceneObject[]): Scene {
  return {
    scene_id: sceneId,
    ts: sceneId * 0.2,
    objects,
    roads: [{ id: "R1", lanes: ["R1_0", "R1_1", "R1_2"] }],
  };
}

export function vehicles(n: number): SceneObject[] {
  const out: SceneObject[] = [];
  for (let i = 0; i < n; i++) {
    out.push(obj({ id: i === 0 ? "AV001" : `V${String(i).padStart(3, "0")}`, x: i * 7, y: (i % 5) * 3.5 }));
  }
  return out;
}

export function queryResult(overrides: Partial<QueryResult> = {}): QueryResult {
  return {
    task: 8,
    task_name: "distance",
    params: { vtype: "truck", color: null, relation: "front", road: null },
    numeric: { task: 8, values: [50.0], matched_ids: ["V002"] },
    semantic: "The queried result is [50.0].",
    advice: "Keep a safe distance.",
    answer: "The queried result is [50.0]. Keep a safe distance.",
    timings_ms: { classification: 1.2, extraction: 0.9, toolbox: 0.1, enhancement: 1.4 },
    scene_id: 12,
    ego_id: "AV001",
    ...overrides,
  };
}
