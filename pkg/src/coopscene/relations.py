"""Spatial/topological relations between scene objects and ego-centric graphs.

The direction angle between an ego e and an object o is the angle between
ego's heading vector (sin h, cos h) and the offset (o - e), signed by the
cross product sin(h)*(y_o - y_e) - cos(h)*(x_o - x_e): positive angles are
on ego's left, negative on ego's right, and a zero cross product yields a
non-negative angle (0 straight ahead, 180 straight behind).

Spatial relation bins are half-open:
    front (-45, 45], left (45, 135], rear (135, 180] u (-180, -135],
    right (-135, -45].

Lane topology compares lane indices on the same road literally:
leftlane when lx_e - lx_o = 1, rightlane when lx_o - lx_e = 1, samelane on
equal indices; farther lanes and other roads carry no lane relation.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .bus import LinguisticScene
from .perception import ObjectInfo

GRAPH_RADIUS_M = 100.0

SPATIAL_RELATIONS = ("front", "rear", "left", "right")
LANE_RELATIONS = ("leftlane", "rightlane", "samelane")

# attribute name -> ObjectInfo projection, the queryable per-entity attributes
ATTRIBUTES = {
    "v": lambda o: o.v,
    "a": lambda o: o.a,
    "h": lambda o: o.h,
    "co": lambda o: o.co,
    "ty": lambda o: o.ty,
    "sg": lambda o: o.sg,
    "le": lambda o: o.le,
    "wi": lambda o: o.wi,
    "he": lambda o: o.he,
    "size": lambda o: [o.le, o.wi, o.he],
}


class GraphError(ValueError):
    pass


def direction_angle(e: ObjectInfo, o: ObjectInfo) -> float:
    """Signed direction angle from ego e to object o, degrees in (-180, 180]."""
    dx, dy = o.x - e.x, o.y - e.y
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        raise GraphError(f"coincident positions for {e.id} and {o.id}")
    hr = math.radians(e.h)
    sin_h, cos_h = math.sin(hr), math.cos(hr)
    cos_theta = (dx * sin_h + dy * cos_h) / dist
    magnitude = math.degrees(math.acos(max(-1.0, min(1.0, cos_theta))))
    cross = sin_h * dy - cos_h * dx
    return -magnitude if cross < 0 else magnitude


def spatial_relation(theta: float) -> str:
    """Bin a direction angle into front/left/rear/right (half-open bounds)."""
    if -45.0 < theta <= 45.0:
        return "front"
    if 45.0 < theta <= 135.0:
        return "left"
    if -135.0 < theta <= -45.0:
        return "right"
    return "rear"


def lane_relation(e: ObjectInfo, o: ObjectInfo) -> str | None:
    if e.rd != o.rd:
        return None
    delta = e.lx - o.lx
    if delta == 1:
        return "leftlane"
    if delta == -1:
        return "rightlane"
    if delta == 0:
        return "samelane"
    return None


def distance(e: ObjectInfo, o: ObjectInfo) -> float:
    return math.hypot(o.x - e.x, o.y - e.y)


@dataclass(frozen=True)
class GraphEdge:
    obj: ObjectInfo
    spatial: str
    lane: str | None
    road: str
    dist: float

    @property
    def relations(self) -> set[str]:
        rels = {self.spatial, f"road({self.road})"}
        if self.lane:
            rels.add(self.lane)
        return rels


@dataclass(frozen=True)
class EgoGraph:
    """Ego-centric relation graph over one scene, limited to a 100 m radius."""

    ego: ObjectInfo
    edges: tuple[GraphEdge, ...]
    scene: LinguisticScene

    def edge(self, object_id: str) -> GraphEdge:
        for e in self.edges:
            if e.obj.id == object_id:
                return e
        raise KeyError(object_id)


def build_graph(scene: LinguisticScene, ego_id: str) -> EgoGraph:
    ego = scene.get(ego_id)
    if ego is None:
        raise GraphError(f"unknown ego id {ego_id}")
    if not ego_id.startswith("AV"):
        raise GraphError(f"ego id {ego_id} is not AV-prefixed")
    edges = []
    for obj in scene.objects:
        if obj.id == ego_id:
            continue
        d = distance(ego, obj)
        if d > GRAPH_RADIUS_M:
            continue
        edges.append(
            GraphEdge(
                obj=obj,
                spatial=spatial_relation(direction_angle(ego, obj)),
                lane=lane_relation(ego, obj),
                road=obj.rd,
                dist=d,
            )
        )
    edges.sort(key=lambda e: (e.dist, e.obj.id))
    return EgoGraph(ego=ego, edges=tuple(edges), scene=scene)


@dataclass(frozen=True)
class AttributedGraph:
    """Ego graph enriched with per-entity attribute maps and one masked attribute.

    masked is None for questions whose answer is derived (distance, count,
    existence) rather than read off an entity.
    """

    base: EgoGraph
    attributes: dict[str, dict]
    masked: tuple[str, str] | None

    def masked_value(self):
        if self.masked is None:
            raise GraphError("no attribute is masked")
        entity, attr = self.masked
        return self.attributes[entity][attr]


def entity_attributes(obj: ObjectInfo) -> dict:
    return {name: fn(obj) for name, fn in ATTRIBUTES.items()}


def build_attributed_graph(
    graph: EgoGraph,
    mask: tuple[str, str] | None = None,
    seed: int | None = None,
) -> AttributedGraph:
    """Attach attributes to every entity and record the masked pair.

    Pass an explicit (entity_id, attribute) mask, or a seed to pick one
    uniformly at random over entities and attribute names.
    """
    attributes = {edge.obj.id: entity_attributes(edge.obj) for edge in graph.edges}
    attributes[graph.ego.id] = entity_attributes(graph.ego)
    if mask is None and seed is not None:
        if not graph.edges:
            raise GraphError("cannot mask: graph has no entities besides ego")
        rng = random.Random(seed)
        entity = rng.choice([e.obj.id for e in graph.edges])
        mask = (entity, rng.choice(sorted(ATTRIBUTES)))
    if mask is not None:
        entity, attr = mask
        if entity not in attributes:
            raise GraphError(f"cannot mask unknown entity {entity}")
        if attr not in attributes[entity]:
            raise GraphError(f"entity {entity} has no attribute {attr}")
    return AttributedGraph(base=graph, attributes=attributes, masked=mask)
