import dataclasses
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopscene.bus import (
    BusError,
    CloudAggregator,
    FreshnessQueue,
    MessageBus,
    OiMessage,
    SceneConstructor,
    construct_scene,
    parse_scene,
    render_scene,
)
from coopscene.stack import run_scenes
from coopscene.traffic import SimConfig

from conftest import make_record


def rec(i, ts=0.0, ds="AV001"):
    return make_record(id=f"V{i:03d}", ts=ts, ds=ds)


def msg(publisher, ids, ts=0.0):
    return OiMessage(publisher=publisher, ts=ts, records=tuple(make_record(id=i, ts=ts, ds=publisher) for i in ids))


# --- pub/sub -------------------------------------------------------------

def test_single_subscriber_receives_once():
    bus = MessageBus()
    seen = []
    bus.subscribe("/OI", seen.append)
    m = msg("AV001", ["V001"])
    bus.publish(m)
    assert seen == [m]


def test_per_publisher_order_preserved():
    bus = MessageBus()
    seen = []
    bus.subscribe("/OI", seen.append)
    m1, m2 = msg("AV001", ["V001"], ts=1.0), msg("AV001", ["V002"], ts=2.0)
    bus.publish(m1)
    bus.publish(m2)
    assert seen == [m1, m2]


def test_three_sensors_ten_messages_each():
    bus = MessageBus()
    seen = []
    bus.subscribe("/OI", seen.append)
    for sensor in ("AV001", "AV002", "RSU1"):
        for k in range(10):
            bus.publish(msg(sensor, [f"V{k:03d}"], ts=float(k)))
    assert len(seen) == 30


def test_message_rejects_foreign_records():
    with pytest.raises(BusError, match="ds"):
        OiMessage(publisher="AV001", ts=0.0, records=(make_record(ds="RSU1"),))


# --- freshness queue ------------------------------------------------------

def test_fifo_eviction_one_at_a_time():
    q = FreshnessQueue(capacity=5)
    for i in range(1, 8):
        q.push([rec(i)])
    assert [r.id for r in q.entries] == [f"V{i:03d}" for i in (3, 4, 5, 6, 7)]


def test_batch_push_keeps_last_capacity():
    q = FreshnessQueue(capacity=5)
    q.push([rec(i) for i in range(1, 8)])
    assert [r.id for r in q.entries] == [f"V{i:03d}" for i in (3, 4, 5, 6, 7)]


def test_empty_push_is_identity():
    q = FreshnessQueue(capacity=5)
    q.push([rec(1)])
    before = [r.id for r in q.entries]
    q.push([])
    assert [r.id for r in q.entries] == before


@settings(max_examples=300, deadline=None)
@given(
    capacity=st.integers(min_value=1, max_value=40),
    batches=st.lists(st.lists(st.integers(min_value=0, max_value=999), max_size=30), max_size=25),
)
def test_queue_matches_sliding_window_model(capacity, batches):
    q = FreshnessQueue(capacity=capacity)
    model = []
    serial = 0
    for batch in batches:
        records = []
        for i in batch:
            records.append(make_record(id=f"V{i:03d}", ts=float(serial)))
            serial += 1
        q.push(records)
        model = (model + records)[-capacity:]
        assert len(q) <= capacity
        assert [(r.id, r.ts) for r in q.entries] == [(r.id, r.ts) for r in model]


# --- scene construction ---------------------------------------------------

def test_dedup_keeps_freshest(network):
    q = FreshnessQueue(capacity=10)
    q.push([make_record(id="car7", ts=10.0, ds="RSU1"), make_record(id="car7", ts=10.1, ds="AV001")])
    scene = construct_scene(q, network, t=10.1)
    assert len(scene.objects) == 1
    assert scene.objects[0].ts == pytest.approx(10.1)
    assert scene.objects[0].ds == "AV001"


def test_dedup_tie_prefers_av_sensor(network):
    q = FreshnessQueue(capacity=10)
    q.push([make_record(id="car7", ts=10.0, ds="R2"), make_record(id="car7", ts=10.0, ds="AV001")])
    scene = construct_scene(q, network, t=10.0)
    assert scene.objects[0].ds == "AV001"


def test_dedup_tie_smallest_sensor_id(network):
    q = FreshnessQueue(capacity=10)
    q.push([make_record(id="car7", ts=10.0, ds="RSU2"), make_record(id="car7", ts=10.0, ds="RSU1")])
    scene = construct_scene(q, network, t=10.0)
    assert scene.objects[0].ds == "RSU1"


def test_empty_queue_yields_empty_scene(network):
    scene = construct_scene(FreshnessQueue(capacity=5), network, t=0.0)
    assert scene.objects == ()


def test_scene_decoupled_from_queue(network):
    q = FreshnessQueue(capacity=10)
    q.push([make_record(id="V001", ts=1.0)])
    scene = construct_scene(q, network, t=1.0)
    q.push([make_record(id="V002", ts=2.0)])
    assert [o.id for o in scene.objects] == ["V001"]


def test_scene_rejects_unknown_lane(network):
    q = FreshnessQueue(capacity=10)
    q.push([make_record(id="V001", ln="NOPE")])
    with pytest.raises(Exception):
        construct_scene(q, network, t=0.0)


def test_constructor_assigns_monotone_ids(network):
    ctor = SceneConstructor(network)
    q = FreshnessQueue(capacity=10)
    ids = [ctor.tick(q, t=float(i)).scene_id for i in range(5)]
    assert ids == [0, 1, 2, 3, 4]


# --- latency knob ----------------------------------------------------------

def test_latency_delays_queue_visibility(network):
    bus = MessageBus()
    cloud = CloudAggregator(bus, capacity=100, latency_ms=100.0)
    bus.publish(msg("AV001", ["V001"], ts=1.0))
    cloud.deliver_until(1.05)
    assert len(cloud.queue) == 0
    cloud.deliver_until(1.10)
    assert len(cloud.queue) == 1


def test_zero_latency_is_synchronous(network):
    bus = MessageBus()
    cloud = CloudAggregator(bus, capacity=100, latency_ms=0.0)
    bus.publish(msg("AV001", ["V001"], ts=1.0))
    assert len(cloud.queue) == 1


# --- canonical rendering ---------------------------------------------------

def test_render_empty_scene_exact_bytes(network):
    scene = construct_scene(FreshnessQueue(capacity=5), network, t=0.0)
    expected = (
        '{"scene_id":0,"ts":0.000,"objects":[],'
        '"roads":[{"id":"R1","lanes":["R1_0","R1_1","R1_2"]},'
        '{"id":"R2","lanes":["R2_0","R2_1"]}]}'
    )
    assert render_scene(scene) == expected


def test_render_parse_render_identical_bytes(scenes):
    for scene in scenes[-5:]:
        text = render_scene(scene)
        assert render_scene(parse_scene(text)) == text


def test_rendered_floats_have_three_decimals(scenes):
    obj = json.loads(render_scene(scenes[-1]))
    text = render_scene(scenes[-1])
    assert '"ts":' in text
    for fragment in text.split('"ts":')[1:]:
        head = fragment.split(",")[0].rstrip("}")
        assert len(head.split(".")[1]) == 3


def test_scene_object_ids_unique(scenes):
    for scene in scenes:
        ids = [o.id for o in scene.objects]
        assert len(ids) == len(set(ids))


def test_negative_zero_never_rendered(network):
    r = dataclasses.replace(make_record(), lat=-0.00004)
    q = FreshnessQueue(capacity=5)
    q.push([r])
    scene = construct_scene(q, network, t=0.0)
    assert '"lat":0.000' in render_scene(scene)


def test_end_to_end_stream_deterministic():
    cfg = SimConfig(seed=9, vehicle_count=15, av_count=2, duration_s=5.0)
    first = [render_scene(s) for s in run_scenes(cfg)]
    second = [render_scene(s) for s in run_scenes(cfg)]
    assert first == second
