"""AV and RSU perception: turn ground-truth snapshots into ObjectInfo records.

Both sensors are noise-free set filters: an AV perceives every object within
its Euclidean detection range (inclusive) plus itself; an RSU perceives every
object traveling inside one of its covered lane sections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .roadnet import LaneSection
from .traffic import COLORS, SIGNALS, VTYPES, Snapshot, VehicleAgent


class PerceptionError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectInfo:
    """One perceived-object record; field names match the wire schema."""

    id: str
    ts: float
    x: float
    y: float
    s: float
    lat: float
    v: float
    a: float
    h: float
    le: float
    wi: float
    he: float
    ty: str
    co: str
    ln: str
    lx: int
    rd: str
    sg: str
    ds: str

    def __post_init__(self):
        if not self.ds:
            raise PerceptionError(f"object {self.id}: empty detecting-sensor id")
        for name in ("ts", "x", "y", "s", "lat", "v", "a", "h", "le", "wi", "he"):
            if not math.isfinite(getattr(self, name)):
                raise PerceptionError(f"object {self.id}: non-finite field {name}")
        if self.ty not in VTYPES:
            raise PerceptionError(f"object {self.id}: unknown type {self.ty}")
        if self.co not in COLORS:
            raise PerceptionError(f"object {self.id}: unknown color {self.co}")
        if self.sg not in SIGNALS:
            raise PerceptionError(f"object {self.id}: unknown signal {self.sg}")


@dataclass(frozen=True)
class SensorSpec:
    kind: str  # "av" | "rsu"
    id: str
    range_m: float = 0.0  # AV detection range
    coverage: tuple[LaneSection, ...] = ()  # RSU lane sections

    def __post_init__(self):
        if self.kind == "av":
            if self.range_m <= 0:
                raise PerceptionError(f"AV sensor {self.id}: range must be > 0")
        elif self.kind == "rsu":
            if not self.coverage:
                raise PerceptionError(f"RSU sensor {self.id}: empty coverage")
        else:
            raise PerceptionError(f"sensor {self.id}: unknown kind {self.kind}")


def record_from_agent(agent: VehicleAgent, ts: float, sensor_id: str, lane_name: str) -> ObjectInfo:
    return ObjectInfo(
        id=agent.id,
        ts=ts,
        x=agent.x,
        y=agent.y,
        s=agent.s,
        lat=agent.lateral,
        v=agent.speed,
        a=agent.accel,
        h=agent.heading,
        le=agent.length,
        wi=agent.width,
        he=agent.height,
        ty=agent.vtype,
        co=agent.color,
        ln=lane_name,
        lx=agent.lane_index,
        rd=agent.road_id,
        sg=agent.signal,
        ds=sensor_id,
    )


def _lane_name(network, agent: VehicleAgent) -> str:
    return network.lane(agent.road_id, agent.lane_index).name


def perceive_av(snapshot: Snapshot, ego: VehicleAgent, spec: SensorSpec, network) -> list[ObjectInfo]:
    """Objects within the AV's detection range (inclusive), plus the ego itself."""
    if spec.kind != "av":
        raise PerceptionError(f"perceive_av needs an av sensor, got {spec.kind}")
    if all(a.id != ego.id for a in snapshot.agents):
        raise PerceptionError(f"ego {ego.id} not present in snapshot")
    out = []
    for agent in snapshot.agents:
        if math.hypot(agent.x - ego.x, agent.y - ego.y) <= spec.range_m:
            out.append(record_from_agent(agent, snapshot.t, spec.id, _lane_name(network, agent)))
    return out


def perceive_rsu(snapshot: Snapshot, spec: SensorSpec, network) -> list[ObjectInfo]:
    """Objects traveling inside any covered lane section."""
    if spec.kind != "rsu":
        raise PerceptionError(f"perceive_rsu needs an rsu sensor, got {spec.kind}")
    out = []
    for agent in snapshot.agents:
        lane_name = _lane_name(network, agent)
        if any(sec.contains(lane_name, agent.s) for sec in spec.coverage):
            out.append(record_from_agent(agent, snapshot.t, spec.id, lane_name))
    return out


def av_sensors(snapshot: Snapshot, range_m: float) -> list[tuple[VehicleAgent, SensorSpec]]:
    """One onboard sensor per AV in the snapshot; sensor id = vehicle id."""
    return [
        (agent, SensorSpec(kind="av", id=agent.id, range_m=range_m))
        for agent in snapshot.agents
        if agent.is_av
    ]


def rsu_sensors(network) -> list[SensorSpec]:
    return [
        SensorSpec(kind="rsu", id=rsu_id, coverage=tuple(sections))
        for rsu_id, sections in sorted(network.rsu_coverages.items())
    ]
