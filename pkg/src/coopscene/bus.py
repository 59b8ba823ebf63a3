"""In-process vehicle-to-cloud data plane.

Sensors publish ObjectInfo batches on the "/OI" topic; a cloud aggregator
keeps them in a fixed-capacity freshness queue (oldest evicted first) and a
scene constructor periodically deduplicates the queue into a linguistic
scene, the JSON unit consumed by everything downstream.

Scenes are canonical: fixed field order, floats quantized to 3 decimals at
construction time, so the in-memory scene and its JSONL rendering carry
exactly the same numbers.
"""
from __future__ import annotations

import dataclasses
import json
from collections import deque
from dataclasses import dataclass, field

from .perception import ObjectInfo
from .roadnet import RoadNetwork

OI_TOPIC = "/OI"

OBJECT_FIELDS = ("id", "ts", "x", "y", "s", "lat", "v", "a", "h", "le", "wi", "he",
                 "ty", "co", "ln", "lx", "rd", "sg", "ds")
FLOAT_FIELDS = frozenset({"ts", "x", "y", "s", "lat", "v", "a", "h", "le", "wi", "he"})


class BusError(ValueError):
    pass


@dataclass(frozen=True)
class OiMessage:
    publisher: str
    ts: float
    records: tuple[ObjectInfo, ...]
    topic: str = OI_TOPIC

    def __post_init__(self):
        for r in self.records:
            if r.ds != self.publisher:
                raise BusError(f"record {r.id} carries ds={r.ds}, expected publisher {self.publisher}")


class MessageBus:
    """Synchronous in-process pub/sub with per-publisher FIFO delivery."""

    def __init__(self):
        self._subscribers: dict[str, list] = {}

    def subscribe(self, topic: str, handler) -> None:
        self._subscribers.setdefault(topic, []).append(handler)

    def publish(self, msg: OiMessage) -> None:
        for handler in self._subscribers.get(msg.topic, []):
            handler(msg)


class FreshnessQueue:
    """Bounded arrival-order buffer; the oldest records get evicted first."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise BusError("queue capacity must be > 0")
        self.capacity = capacity
        self._entries: deque[ObjectInfo] = deque(maxlen=capacity)

    def push(self, records) -> None:
        self._entries.extend(records)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> list[ObjectInfo]:
        return list(self._entries)


class CloudAggregator:
    """Cloud-side "/OI" subscriber feeding the freshness queue.

    With a nonzero transport latency, records become visible to the queue
    only once sim time has advanced past publish time + latency.
    """

    def __init__(self, bus: MessageBus, capacity: int, latency_ms: float = 0.0):
        self.queue = FreshnessQueue(capacity)
        self.latency_s = latency_ms / 1000.0
        self._pending: list[tuple[float, int, OiMessage]] = []
        self._seq = 0
        bus.subscribe(OI_TOPIC, self._on_message)

    def _on_message(self, msg: OiMessage) -> None:
        if self.latency_s <= 0:
            self.queue.push(msg.records)
        else:
            self._pending.append((msg.ts + self.latency_s, self._seq, msg))
            self._seq += 1

    def deliver_until(self, t: float) -> None:
        if not self._pending:
            return
        due = [p for p in self._pending if p[0] <= t]
        self._pending = [p for p in self._pending if p[0] > t]
        for _, _, msg in sorted(due, key=lambda p: (p[0], p[1])):
            self.queue.push(msg.records)


@dataclass(frozen=True)
class RoadContext:
    id: str
    lanes: tuple[str, ...]


@dataclass(frozen=True)
class LinguisticScene:
    scene_id: int
    ts: float
    objects: tuple[ObjectInfo, ...]
    roads: tuple[RoadContext, ...]
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id = {}
        for o in self.objects:
            if o.id in by_id:
                raise BusError(f"scene {self.scene_id}: duplicate object id {o.id}")
            by_id[o.id] = o
        object.__setattr__(self, "_by_id", by_id)

    def get(self, object_id: str) -> ObjectInfo | None:
        return self._by_id.get(object_id)

    def av_ids(self) -> list[str]:
        return sorted(o.id for o in self.objects if o.id.startswith("AV"))


def quantize(v: float) -> float:
    """Round through the canonical 3-decimal wire rendering."""
    q = float(format(v, ".3f"))
    return 0.0 if q == 0 else q


def _quantize_record(r: ObjectInfo) -> ObjectInfo:
    return dataclasses.replace(r, **{name: quantize(getattr(r, name)) for name in FLOAT_FIELDS})


def construct_scene(queue: FreshnessQueue, network: RoadNetwork, t: float, scene_id: int = 0) -> LinguisticScene:
    """Deduplicate the queue into a scene snapshot.

    Per object id the freshest record (max ts) wins; on a ts tie an
    AV-sensor record beats an RSU record, then the lexicographically
    smallest sensor id wins.
    """
    best: dict[str, ObjectInfo] = {}
    for rec in queue.entries:
        cur = best.get(rec.id)
        if cur is None or _fresher(rec, cur):
            best[rec.id] = rec
    objects = []
    for rec in sorted(best.values(), key=lambda r: r.id):
        network.lane_by_name(rec.ln)  # raises if the scene references unknown lanes
        objects.append(_quantize_record(rec))
    roads = tuple(RoadContext(id=r["id"], lanes=tuple(r["lanes"])) for r in network.road_summary())
    return LinguisticScene(scene_id=scene_id, ts=quantize(t), objects=tuple(objects), roads=roads)


def _fresher(new: ObjectInfo, cur: ObjectInfo) -> bool:
    if new.ts != cur.ts:
        return new.ts > cur.ts
    new_av, cur_av = new.ds.startswith("AV"), cur.ds.startswith("AV")
    if new_av != cur_av:
        return new_av
    return new.ds < cur.ds


class SceneConstructor:
    """Assigns monotonically increasing scene ids across ticks."""

    def __init__(self, network: RoadNetwork, start_id: int = 0):
        self.network = network
        self.next_id = start_id

    def tick(self, queue: FreshnessQueue, t: float) -> LinguisticScene:
        scene = construct_scene(queue, self.network, t, scene_id=self.next_id)
        self.next_id += 1
        return scene


# --- canonical JSON rendering -------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        s = format(v, ".3f")
        return "0.000" if s == "-0.000" else s
    if isinstance(v, int):
        return str(v)
    return json.dumps(v)


def _render_object(o: ObjectInfo) -> str:
    parts = []
    for name in OBJECT_FIELDS:
        v = getattr(o, name)
        if name in FLOAT_FIELDS:
            v = float(v)
        parts.append(f"{json.dumps(name)}:{_fmt(v)}")
    return "{" + ",".join(parts) + "}"


def render_scene(scene: LinguisticScene) -> str:
    """Canonical one-line JSON rendering; identical scenes render to identical bytes."""
    objects = ",".join(_render_object(o) for o in scene.objects)
    roads = ",".join(
        "{" + f'"id":{json.dumps(r.id)},"lanes":[' + ",".join(json.dumps(l) for l in r.lanes) + "]}"
        for r in scene.roads
    )
    return (
        f'{{"scene_id":{scene.scene_id},"ts":{_fmt(float(scene.ts))},'
        f'"objects":[{objects}],"roads":[{roads}]}}'
    )


def parse_scene(text: str) -> LinguisticScene:
    obj = json.loads(text)
    objects = tuple(
        ObjectInfo(**{name: (float(rec[name]) if name in FLOAT_FIELDS else rec[name]) for name in OBJECT_FIELDS})
        for rec in obj["objects"]
    )
    roads = tuple(RoadContext(id=r["id"], lanes=tuple(r["lanes"])) for r in obj["roads"])
    return LinguisticScene(scene_id=obj["scene_id"], ts=float(obj["ts"]), objects=objects, roads=roads)


def load_scenes(path) -> list[LinguisticScene]:
    scenes = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                scenes.append(parse_scene(line))
    return scenes
