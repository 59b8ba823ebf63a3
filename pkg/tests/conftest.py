from __future__ import annotations

import random

import pytest

from coopscene.bus import LinguisticScene, RoadContext, construct_scene, FreshnessQueue
from coopscene.perception import ObjectInfo
from coopscene.qagen import default_templates, generate_dataset
from coopscene.roadnet import builtin_network
from coopscene.stack import run_scenes
from coopscene.traffic import COLORS, VTYPES, DIMENSIONS, SimConfig, Snapshot, VehicleAgent


@pytest.fixture(scope="session")
def network():
    return builtin_network()


@pytest.fixture(scope="session")
def sim_config():
    return SimConfig(seed=42, vehicle_count=30, av_count=3, duration_s=20.0)


@pytest.fixture(scope="session")
def scenes(sim_config):
    return run_scenes(sim_config)


@pytest.fixture(scope="session")
def scenes_by_id(scenes):
    return {s.scene_id: s for s in scenes}


@pytest.fixture(scope="session")
def templates():
    return default_templates()


@pytest.fixture(scope="session")
def dataset(scenes, templates):
    pairs, _ = generate_dataset(scenes, templates, n=300, seed=1)
    return pairs


def make_record(
    id="V001",
    ts=0.0,
    x=0.0,
    y=0.0,
    s=0.0,
    lat=0.0,
    v=10.0,
    a=0.0,
    h=0.0,
    le=4.5,
    wi=1.8,
    he=1.5,
    ty="car",
    co="red",
    ln="R1_1",
    lx=1,
    rd="R1",
    sg="none",
    ds="AV001",
) -> ObjectInfo:
    return ObjectInfo(
        id=id, ts=ts, x=x, y=y, s=s, lat=lat, v=v, a=a, h=h,
        le=le, wi=wi, he=he, ty=ty, co=co, ln=ln, lx=lx, rd=rd, sg=sg, ds=ds,
    )


def make_scene(records, network=None, scene_id=0, ts=0.0) -> LinguisticScene:
    net = network or builtin_network()
    roads = tuple(RoadContext(id=r["id"], lanes=tuple(r["lanes"])) for r in net.road_summary())
    return LinguisticScene(scene_id=scene_id, ts=ts, objects=tuple(records), roads=roads)


def scene_from_queue(records, network=None, scene_id=0, ts=0.0) -> LinguisticScene:
    net = network or builtin_network()
    q = FreshnessQueue(capacity=max(1, len(records)))
    q.push(records)
    return construct_scene(q, net, ts, scene_id=scene_id)


def make_agent(network, vid, road_id, lane_index, s, speed=10.0, vtype="car", color="red"):
    lane = network.lane(road_id, lane_index)
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
        speed=speed,
        desired_speed=speed,
    )
    agent.x, agent.y = lane.point_at(s)
    agent.heading = lane.heading_at(s)
    return agent


def random_snapshot(network, rng: random.Random, n: int = 20, t: float = 1.0, av_count: int = 2) -> Snapshot:
    lanes = [(r.id, l.index, l) for r in network.roads.values() for l in r.lanes]
    agents = []
    for i in range(n):
        road_id, lane_index, lane = lanes[rng.randrange(len(lanes))]
        vid = f"AV{i + 1:03d}" if i < av_count else f"V{i + 1:03d}"
        agent = make_agent(
            network,
            vid,
            road_id,
            lane_index,
            s=rng.uniform(0.0, lane.length),
            speed=rng.uniform(0.0, 20.0),
            vtype=rng.choice(VTYPES),
            color=rng.choice(COLORS),
        )
        agents.append(agent)
    return Snapshot(t=t, agents=tuple(agents))
