"""Static road network: roads, ordered lanes, RSU lane-section coverage.

Coordinate conventions used across the whole stack:
  * world frame: meters, x east, y north
  * lane frame: s = arc length along the centerline polyline, lateral =
    signed perpendicular offset, positive toward the side on which lane
    indices increase (index 0 is the rightmost lane, indices grow leftward,
    so positive lateral = left of the direction of travel)
  * heading: degrees clockwise from north (+y), in [0, 360)
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


class NetworkError(ValueError):
    """Raised for unparseable network files or invariant violations."""


@dataclass(frozen=True)
class Lane:
    road_id: str
    index: int
    name: str
    width: float
    centerline: tuple[tuple[float, float], ...]
    # cumulative arc length at each centerline vertex; [-1] is the lane length
    arc: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.centerline) < 2:
            raise NetworkError(f"lane {self.name}: centerline needs >= 2 points")
        if self.width <= 0:
            raise NetworkError(f"lane {self.name}: width must be > 0")
        if self.index < 0:
            raise NetworkError(f"lane {self.name}: index must be >= 0")
        acc = [0.0]
        for (x0, y0), (x1, y1) in zip(self.centerline, self.centerline[1:]):
            acc.append(acc[-1] + math.hypot(x1 - x0, y1 - y0))
        if acc[-1] <= 0:
            raise NetworkError(f"lane {self.name}: zero-length centerline")
        object.__setattr__(self, "arc", tuple(acc))

    @property
    def length(self) -> float:
        return self.arc[-1]

    def point_at(self, s: float, lateral: float = 0.0) -> tuple[float, float]:
        """World point at arc length s, offset laterally (positive = left)."""
        s = min(max(s, 0.0), self.length)
        seg = self._segment_at(s)
        (x0, y0), (x1, y1) = self.centerline[seg], self.centerline[seg + 1]
        seg_len = self.arc[seg + 1] - self.arc[seg]
        t = (s - self.arc[seg]) / seg_len
        dx, dy = (x1 - x0) / seg_len, (y1 - y0) / seg_len
        # left normal of direction (dx, dy) is (-dy, dx)
        return (x0 + t * (x1 - x0) - dy * lateral, y0 + t * (y1 - y0) + dx * lateral)

    def tangent_at(self, s: float) -> tuple[float, float]:
        seg = self._segment_at(min(max(s, 0.0), self.length))
        (x0, y0), (x1, y1) = self.centerline[seg], self.centerline[seg + 1]
        seg_len = self.arc[seg + 1] - self.arc[seg]
        return ((x1 - x0) / seg_len, (y1 - y0) / seg_len)

    def heading_at(self, s: float) -> float:
        """Heading of the centerline tangent, degrees clockwise from north."""
        dx, dy = self.tangent_at(s)
        return math.degrees(math.atan2(dx, dy)) % 360.0

    def _segment_at(self, s: float) -> int:
        for i in range(len(self.arc) - 1):
            if s <= self.arc[i + 1]:
                return i
        return len(self.arc) - 2


@dataclass(frozen=True)
class Road:
    id: str
    lanes: tuple[Lane, ...]

    def __post_init__(self):
        indices = sorted(l.index for l in self.lanes)
        if indices != list(range(len(self.lanes))):
            raise NetworkError(f"road {self.id}: non-contiguous lane indices {indices}")
        for lane in self.lanes:
            if lane.road_id != self.id:
                raise NetworkError(f"road {self.id}: lane {lane.name} carries road_id {lane.road_id}")
        object.__setattr__(self, "lanes", tuple(sorted(self.lanes, key=lambda l: l.index)))

    def lane(self, index: int) -> Lane:
        try:
            return self.lanes[index]
        except IndexError:
            raise NetworkError(f"road {self.id}: no lane with index {index}") from None


@dataclass(frozen=True)
class LaneSection:
    lane: Lane
    s_min: float
    s_max: float

    def __post_init__(self):
        if not (0 <= self.s_min < self.s_max <= self.lane.length):
            raise NetworkError(
                f"lane section on {self.lane.name}: range [{self.s_min}, {self.s_max}] "
                f"outside [0, {self.lane.length}]"
            )

    def contains(self, lane_name: str, s: float) -> bool:
        return lane_name == self.lane.name and self.s_min <= s <= self.s_max


class RoadNetwork:
    """Immutable after construction; safe to share across threads."""

    def __init__(self, roads: list[Road], rsu_coverages: dict[str, list[LaneSection]]):
        self.roads: dict[str, Road] = {}
        self._lanes_by_name: dict[str, Lane] = {}
        for road in roads:
            if road.id in self.roads:
                raise NetworkError(f"duplicate road id {road.id}")
            self.roads[road.id] = road
            for lane in road.lanes:
                if lane.name in self._lanes_by_name:
                    raise NetworkError(f"duplicate lane name {lane.name}")
                self._lanes_by_name[lane.name] = lane
        self.rsu_coverages = dict(rsu_coverages)

    def lane(self, road_id: str, lane_index: int) -> Lane:
        road = self.roads.get(road_id)
        if road is None:
            raise NetworkError(f"unknown road {road_id}")
        return road.lane(lane_index)

    def lane_by_name(self, name: str) -> Lane:
        lane = self._lanes_by_name.get(name)
        if lane is None:
            raise NetworkError(f"unknown lane {name}")
        return lane

    def all_lanes(self) -> list[Lane]:
        return list(self._lanes_by_name.values())

    def road_summary(self) -> list[dict]:
        return [
            {"id": road.id, "lanes": [lane.name for lane in road.lanes]}
            for road in self.roads.values()
        ]


def project(network: RoadNetwork, road_id: str, lane_index: int, x: float, y: float) -> tuple[float, float]:
    """Project a world point onto a lane: (s, lateral).

    lateral is positive toward the increasing-lane-index side (left of the
    direction of travel). Rejects points farther than 2 x lane width from
    the centerline.
    """
    lane = network.lane(road_id, lane_index)
    best = None  # (distance^2, s, lateral)
    for i in range(len(lane.centerline) - 1):
        (x0, y0), (x1, y1) = lane.centerline[i], lane.centerline[i + 1]
        seg_len = lane.arc[i + 1] - lane.arc[i]
        dx, dy = (x1 - x0) / seg_len, (y1 - y0) / seg_len
        t = (x - x0) * dx + (y - y0) * dy
        t = min(max(t, 0.0), seg_len)
        px, py = x0 + t * dx, y0 + t * dy
        d2 = (x - px) ** 2 + (y - py) ** 2
        if best is None or d2 < best[0]:
            # signed offset: cross(direction, point - foot); left is positive
            lat = dx * (y - py) - dy * (x - px)
            best = (d2, lane.arc[i] + t, lat)
    d2, s, lat = best
    if math.sqrt(d2) > 2.0 * lane.width:
        raise NetworkError(
            f"point ({x:.2f}, {y:.2f}) too far from centerline of {lane.name} "
            f"({math.sqrt(d2):.2f} m > {2.0 * lane.width:.2f} m)"
        )
    return s, lat


def _load_obj(obj: dict, source: str) -> RoadNetwork:
    roads = []
    for ri, rd in enumerate(obj.get("roads", [])):
        try:
            road_id = rd["id"]
            lanes = [
                Lane(
                    road_id=road_id,
                    index=ln["index"],
                    name=ln["name"],
                    width=float(ln["width"]),
                    centerline=tuple((float(p[0]), float(p[1])) for p in ln["centerline"]),
                )
                for ln in rd["lanes"]
            ]
        except KeyError as e:
            raise NetworkError(f"{source}: roads[{ri}] missing field {e}") from None
        roads.append(Road(id=road_id, lanes=tuple(lanes)))
    net = RoadNetwork(roads, {})
    coverages: dict[str, list[LaneSection]] = {}
    for rsu_id, sections in obj.get("rsu_coverages", {}).items():
        out = []
        for si, sec in enumerate(sections):
            try:
                lane = net.lane_by_name(sec["lane"])
                a, b = sec["s_range"]
            except KeyError as e:
                raise NetworkError(f"{source}: rsu_coverages[{rsu_id}][{si}] missing field {e}") from None
            out.append(LaneSection(lane=lane, s_min=float(a), s_max=float(b)))
        coverages[rsu_id] = out
    net.rsu_coverages = coverages
    return net


def load_network(path: str | Path) -> RoadNetwork:
    """Load and validate a road network from its JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise NetworkError(f"cannot read network file {path}: {e}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise NetworkError(f"{path}: invalid JSON at line {e.lineno} col {e.colno}: {e.msg}") from None
    return _load_obj(obj, str(path))


def builtin_network() -> RoadNetwork:
    """The packaged two-road crossing used as the default map and test fixture."""
    text = resources.files("coopscene.data").joinpath("net_cross.json").read_text()
    return _load_obj(json.loads(text), "builtin:net_cross")
