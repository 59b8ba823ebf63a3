"""Deterministic synthetic traffic on a road network.

Car-following rule (documented because tests evaluate it by hand):
  * safe gap ahead = MIN_GAP + HEADWAY_T * v  (2.0 m + 2.0 s headway)
  * gap >= safe gap: accelerate toward the vehicle's desired speed,
    a = clamp((v_des - v) / SPEED_TAU, -ACCEL_MAX, ACCEL_MAX)
  * gap < safe gap: brake proportionally to the violation,
    a = -BRAKE_MAX * (1 - gap / safe gap), clamped to [-BRAKE_MAX, 0]
  * positions additionally clamp so a follower's front bumper never comes
    within MIN_SEPARATION of its leader's rear bumper

s measures the front bumper along the lane. Heading follows the centerline
tangent (degrees clockwise from north). Turn signals switch on 2 s before a
lane change and clear after it; the brake signal shows while a <= -2 m/s2.
Everything is driven by one seeded RNG, so runs are reproducible.
"""
from __future__ import annotations

import dataclasses
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .roadnet import RoadNetwork, builtin_network, load_network

VTYPES = ("car", "truck", "bus", "motorcycle")
COLORS = ("red", "yellow", "blue", "white", "black", "green", "gray")
SIGNALS = ("none", "left", "right", "brake")

# (length, width, height) per vehicle type, meters
DIMENSIONS = {
    "car": (4.5, 1.8, 1.5),
    "truck": (8.0, 2.5, 3.2),
    "bus": (12.0, 2.5, 3.0),
    "motorcycle": (2.2, 0.8, 1.4),
}

MIN_GAP = 2.0
HEADWAY_T = 2.0
SPEED_TAU = 2.0
ACCEL_MAX = 2.5
BRAKE_MAX = 4.5
MIN_SEPARATION = 0.5
BRAKE_SIGNAL_AT = -2.0
SIGNAL_LEAD_S = 2.0


@dataclass
class SimConfig:
    seed: int = 42
    dt: float = 0.2
    duration_s: float = 600.0
    vehicle_count: int = 60
    av_count: int = 4
    network: str = "builtin:cross"
    av_sensor_range: float = 50.0
    scene_hz: float = 5.0
    queue_capacity: int = 2000
    bus_latency_ms: float = 0.0
    speed_range: tuple[float, float] = (8.0, 15.0)
    lane_change_rate: float = 0.02  # scheduling probability per vehicle per second
    type_weights: dict[str, float] = field(
        default_factory=lambda: {"car": 0.6, "truck": 0.2, "bus": 0.1, "motorcycle": 0.1}
    )
    color_weights: dict[str, float] = field(default_factory=lambda: {c: 1.0 for c in COLORS})

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.av_count > self.vehicle_count:
            raise ValueError("av_count must be <= vehicle_count")

    @classmethod
    def from_json(cls, path: str | Path) -> "SimConfig":
        obj = json.loads(Path(path).read_text())
        if "speed_range" in obj:
            obj["speed_range"] = tuple(obj["speed_range"])
        return cls(**obj)

    def load_network(self) -> RoadNetwork:
        if self.network == "builtin:cross":
            return builtin_network()
        return load_network(self.network)


@dataclass
class VehicleAgent:
    id: str
    vtype: str
    color: str
    length: float
    width: float
    height: float
    route: tuple[tuple[str, int], ...]  # (road_id, lane_index) segments, cyclic
    route_pos: int
    s: float
    speed: float
    desired_speed: float
    accel: float = 0.0
    heading: float = 0.0
    signal: str = "none"
    x: float = 0.0
    y: float = 0.0
    lateral: float = 0.0
    # pending lane change: (execute_at_t, target_lane_index, signal_side)
    pending_change: tuple[float, int, str] | None = None

    @property
    def road_id(self) -> str:
        return self.route[self.route_pos][0]

    @property
    def lane_index(self) -> int:
        return self.route[self.route_pos][1]

    @property
    def is_av(self) -> bool:
        return self.id.startswith("AV")


@dataclass(frozen=True)
class Snapshot:
    t: float
    agents: tuple[VehicleAgent, ...]

    def agent(self, agent_id: str) -> VehicleAgent:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)


class TrafficWorld:
    def __init__(self, config: SimConfig, network: RoadNetwork | None = None):
        self.config = config
        self.network = network or config.load_network()
        self.rng = random.Random(config.seed)
        self.step_index = 0
        self.agents: list[VehicleAgent] = []
        self._spawn_all()

    @property
    def t(self) -> float:
        return self.step_index * self.config.dt

    def _spawn_all(self):
        cfg = self.config
        lanes = [(r.id, l.index, l) for r in self.network.roads.values() for l in r.lanes]
        counters = {True: 0, False: 0}
        for i in range(cfg.vehicle_count):
            is_av = i < cfg.av_count
            counters[is_av] += 1
            vid = f"AV{counters[True]:03d}" if is_av else f"V{counters[False]:03d}"
            road_id, lane_index, lane = lanes[i % len(lanes)]
            slot = i // len(lanes)
            per_lane = math.ceil(cfg.vehicle_count / len(lanes))
            spacing = lane.length / (per_lane + 1)
            s = min(lane.length, (slot + 1) * spacing + self.rng.uniform(0, spacing * 0.3))
            vtype = self._weighted(cfg.type_weights, VTYPES)
            color = self._weighted(cfg.color_weights, COLORS)
            le, wi, he = DIMENSIONS[vtype]
            agent = VehicleAgent(
                id=vid,
                vtype=vtype,
                color=color,
                length=le,
                width=wi,
                height=he,
                route=((road_id, lane_index),),
                route_pos=0,
                s=s,
                speed=self.rng.uniform(*cfg.speed_range) * 0.6,
                desired_speed=self.rng.uniform(*cfg.speed_range),
            )
            self._place(agent)
            self.agents.append(agent)
        self.agents.sort(key=lambda a: a.id)
        # initial spawn may stack vehicles closer than the running invariant
        # allows; push violators back until every lane satisfies it
        for group in self._by_lane().values():
            for leader, follower in zip(group, group[1:]):
                limit = leader.s - leader.length - MIN_SEPARATION
                if follower.s > limit:
                    follower.s = max(0.0, limit)
                    self._place(follower)

    def _weighted(self, weights: dict[str, float], universe: tuple[str, ...]) -> str:
        names = [n for n in universe if weights.get(n, 0) > 0]
        return self.rng.choices(names, weights=[weights[n] for n in names], k=1)[0]

    def _place(self, agent: VehicleAgent):
        lane = self.network.lane(agent.road_id, agent.lane_index)
        agent.x, agent.y = lane.point_at(agent.s, agent.lateral)
        agent.heading = lane.heading_at(agent.s)

    def _by_lane(self) -> dict[tuple[str, int], list[VehicleAgent]]:
        groups: dict[tuple[str, int], list[VehicleAgent]] = {}
        for a in self.agents:
            groups.setdefault((a.road_id, a.lane_index), []).append(a)
        for g in groups.values():
            g.sort(key=lambda a: (-a.s, a.id))  # leaders first
        return groups

    def step(self, dt: float | None = None):
        dt = self.config.dt if dt is None else dt
        t = self.t
        self._maybe_schedule_changes(t)
        self._execute_changes(t)
        for group in self._by_lane().values():
            leader = None
            for agent in group:
                self._advance(agent, leader, dt)
                leader = agent
        self.step_index += 1

    def _advance(self, agent: VehicleAgent, leader: VehicleAgent | None, dt: float):
        lane = self.network.lane(agent.road_id, agent.lane_index)
        safe_gap = MIN_GAP + HEADWAY_T * agent.speed
        if leader is not None:
            gap = (leader.s - leader.length) - agent.s
            if gap < safe_gap:
                a = -BRAKE_MAX * (1.0 - max(gap, 0.0) / safe_gap)
                a = max(-BRAKE_MAX, min(0.0, a))
            else:
                a = self._free_accel(agent)
        else:
            a = self._free_accel(agent)
        v_new = max(0.0, agent.speed + a * dt)
        s_new = agent.s + v_new * dt
        if leader is not None:
            s_new = min(s_new, leader.s - leader.length - MIN_SEPARATION)
            s_new = max(s_new, agent.s)  # never move backwards
            v_new = (s_new - agent.s) / dt
        if s_new > lane.length:
            s_new, v_new = self._wrap(agent, lane.length, s_new, v_new)
        agent.accel = (v_new - agent.speed) / dt
        agent.speed = v_new
        agent.s = s_new
        self._place(agent)
        self._update_signal(agent)

    def _free_accel(self, agent: VehicleAgent) -> float:
        a = (agent.desired_speed - agent.speed) / SPEED_TAU
        return max(-ACCEL_MAX, min(ACCEL_MAX, a))

    def _wrap(self, agent: VehicleAgent, length: float, s_new: float, v_new: float) -> tuple[float, float]:
        """Despawn at route end, respawn on the next route segment.

        The entry zone must be clear; otherwise the agent waits at the end
        of its current lane.
        """
        next_pos = (agent.route_pos + 1) % len(agent.route)
        road_id, lane_index = agent.route[next_pos]
        entry_s = min(s_new - length, 5.0)
        for other in self.agents:
            if other is agent or (other.road_id, other.lane_index) != (road_id, lane_index):
                continue
            rear, front = other.s - other.length, other.s
            if rear - MIN_SEPARATION <= entry_s and front + agent.length + MIN_SEPARATION >= entry_s:
                return length, 0.0  # blocked: hold at the end of the lane
        agent.route_pos = next_pos
        agent.pending_change = None
        return entry_s, v_new

    def _maybe_schedule_changes(self, t: float):
        p = self.config.lane_change_rate * self.config.dt
        for agent in self.agents:
            if agent.pending_change is not None:
                continue
            if self.rng.random() >= p:
                continue
            road = self.network.roads[agent.road_id]
            options = []
            if agent.lane_index + 1 < len(road.lanes):
                options.append((agent.lane_index + 1, "left"))
            if agent.lane_index - 1 >= 0:
                options.append((agent.lane_index - 1, "right"))
            if not options:
                continue
            target, side = self.rng.choice(options)
            agent.pending_change = (t + SIGNAL_LEAD_S, target, side)

    def _execute_changes(self, t: float):
        for agent in self.agents:
            if agent.pending_change is None or t < agent.pending_change[0]:
                continue
            _, target, _ = agent.pending_change
            agent.pending_change = None
            lane = self.network.lane(agent.road_id, target)
            s = min(agent.s, lane.length)
            # occupancy recomputed per change so same-step changes see each other
            others = [
                a for a in self.agents
                if a is not agent and (a.road_id, a.lane_index) == (agent.road_id, target)
            ]
            if self._spot_clear(others, agent, s):
                agent.route = ((agent.road_id, target),)
                agent.route_pos = 0
                agent.s = s
                self._place(agent)

    def _spot_clear(self, others: list[VehicleAgent], agent: VehicleAgent, s: float) -> bool:
        for other in others:
            ahead_gap = (other.s - other.length) - s
            behind_gap = (s - agent.length) - other.s
            if ahead_gap < MIN_SEPARATION and behind_gap < MIN_SEPARATION:
                return False
        return True

    def _update_signal(self, agent: VehicleAgent):
        if agent.pending_change is not None:
            agent.signal = agent.pending_change[2]
        elif agent.accel <= BRAKE_SIGNAL_AT:
            agent.signal = "brake"
        else:
            agent.signal = "none"

    def snapshot(self) -> Snapshot:
        return Snapshot(t=self.t, agents=tuple(dataclasses.replace(a) for a in self.agents))
