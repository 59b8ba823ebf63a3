"""Deterministic spatial-query operators over a linguistic scene.

execute() is the branching logic behind the prompt chain: given a task id
and extracted parameters it selects the matching objects and projects the
requested quantity. Matches are ordered by ascending distance to the ego
(ties broken by id), which is also the order QA ground truth is stored in.

Road-relation queries are zero-hop: they filter on the road name over the
whole scene, with no 100 m radius. Every other relation is ego-centric and
only sees objects within 100 m of the ego. The ego never matches itself.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

from .bus import LinguisticScene
from .perception import ObjectInfo
from .relations import GRAPH_RADIUS_M, direction_angle, distance, lane_relation, spatial_relation


class ToolboxError(ValueError):
    pass


class QueryTask(enum.IntEnum):
    VELOCITY = 1
    ACCELERATION = 2
    HEADING = 3
    COLOR = 4
    CLASSIFICATION = 5
    SIZE = 6
    STATUS = 7
    DISTANCE = 8
    COUNT = 9
    EXISTENCE = 10

    @property
    def label(self) -> str:
        return TASK_LABELS[self.value]


TASK_LABELS = {
    1: "velocity",
    2: "acceleration",
    3: "heading",
    4: "color",
    5: "classification",
    6: "size",
    7: "status",
    8: "distance",
    9: "count",
    10: "existence",
}

RELATION_VALUES = ("front", "rear", "left", "right", "leftlane", "rightlane",
                   "samelane", "road", "surrounding")


@dataclass(frozen=True)
class QueryParams:
    vtype: str | None = None
    color: str | None = None
    relation: str = "surrounding"
    road: str | None = None

    def __post_init__(self):
        if self.relation not in RELATION_VALUES:
            raise ToolboxError(f"unknown relation {self.relation}")
        if self.relation == "road" and not self.road:
            raise ToolboxError("road relation requires a road name")

    def to_dict(self) -> dict:
        return {"vtype": self.vtype, "color": self.color, "relation": self.relation, "road": self.road}

    @classmethod
    def from_dict(cls, d: dict) -> "QueryParams":
        return cls(
            vtype=d.get("vtype"),
            color=d.get("color"),
            relation=d.get("relation") or "surrounding",
            road=d.get("road"),
        )


@dataclass(frozen=True)
class QueryResult:
    """values is a vector for attribute/distance tasks, a scalar for count/existence."""

    task: QueryTask
    values: list | int
    matched_ids: list[str]

    def to_dict(self) -> dict:
        return {"task": int(self.task), "values": self.values, "matched_ids": self.matched_ids}


def select_objects(scene: LinguisticScene, ego_id: str | None, params: QueryParams) -> list[ObjectInfo]:
    """Objects matching the parameter constraints, distance-ascending."""
    ego = scene.get(ego_id) if ego_id else None
    if params.relation != "road" and ego is None:
        raise ToolboxError(f"unknown ego id {ego_id}")
    out = []
    for obj in scene.objects:
        if ego is not None and obj.id == ego.id:
            continue
        if params.vtype is not None and obj.ty != params.vtype:
            continue
        if params.color is not None and obj.co != params.color:
            continue
        if params.relation == "road":
            if obj.rd != params.road:
                continue
        else:
            if params.road is not None and obj.rd != params.road:
                continue
            d = distance(ego, obj)
            if d > GRAPH_RADIUS_M:
                continue
            if params.relation in ("front", "rear", "left", "right"):
                if spatial_relation(direction_angle(ego, obj)) != params.relation:
                    continue
            elif params.relation in ("leftlane", "rightlane", "samelane"):
                if lane_relation(ego, obj) != params.relation:
                    continue
        out.append(obj)
    if ego is not None:
        out.sort(key=lambda o: (distance(ego, o), o.id))
    else:
        out.sort(key=lambda o: o.id)
    return out


def execute(task: QueryTask, params: QueryParams, scene: LinguisticScene, ego_id: str | None) -> QueryResult:
    task = QueryTask(task)
    matches = select_objects(scene, ego_id, params)
    ids = [o.id for o in matches]
    if task == QueryTask.COUNT:
        return QueryResult(task, len(matches), ids)
    if task == QueryTask.EXISTENCE:
        return QueryResult(task, 1 if matches else 0, ids)
    if task == QueryTask.DISTANCE:
        ego = scene.get(ego_id)
        if ego is None:
            raise ToolboxError(f"distance query needs a known ego, got {ego_id}")
        return QueryResult(task, [distance(ego, o) for o in matches], ids)
    projector = {
        QueryTask.VELOCITY: lambda o: o.v,
        QueryTask.ACCELERATION: lambda o: o.a,
        QueryTask.HEADING: lambda o: o.h,
        QueryTask.COLOR: lambda o: o.co,
        QueryTask.CLASSIFICATION: lambda o: o.ty,
        QueryTask.SIZE: lambda o: [o.le, o.wi, o.he],
        QueryTask.STATUS: lambda o: o.sg,
    }[task]
    return QueryResult(task, [projector(o) for o in matches], ids)


def values_close(a, b, tol: float = 1e-6) -> bool:
    """Structural equality with a float tolerance; shapes must match exactly."""
    if isinstance(a, bool) or isinstance(b, bool):
        return int(a) == int(b) if isinstance(b, (bool, int)) and isinstance(a, (bool, int)) else False
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(values_close(x, y, tol) for x, y in zip(a, b))
    return a == b


def render_values(values) -> str:
    return json.dumps(values)
