// Wire formats of the scene service (see docs/schemas/ in the repo root).

export interface SceneObject {
  id: string;
  ts: number;
  x: number;
  y: number;
  s: number;
  lat: number;
  v: number;
  a: number;
  h: number;
  le: number;
  wi: number;
  he: number;
  ty: string;
  co: string;
  ln: string;
  lx: number;
  rd: string;
  sg: string;
  ds: string;
}

export interface RoadInfo {
  id: string;
  lanes: string[];
}

export interface Scene {
  scene_id: number;
  ts: number;
  objects: SceneObject[];
  roads: RoadInfo[];
}

export interface QueryParams {
  vtype: string | null;
  color: string | null;
  relation: string;
  road: string | null;
}

export interface NumericResult {
  task: number;
  values: number | unknown[];
  matched_ids: string[];
}

export interface QueryResult {
  task: number;
  task_name: string;
  params: QueryParams;
  numeric: NumericResult;
  semantic: string;
  advice: string;
  answer: string;
  timings_ms: Record<string, number>;
  scene_id: number;
  ego_id: string;
}

export interface QueryError {
  detail: string;
  stage?: string;
}
