import math
import random

import pytest

from coopscene.relations import (
    GraphError,
    build_attributed_graph,
    build_graph,
    direction_angle,
    distance,
    lane_relation,
    spatial_relation,
)

from conftest import make_record, make_scene


# independent oracle: rotate the object into the ego body frame and compare
# forward/left components directly, no arccos involved
def quadrant_oracle(e, o):
    hr = math.radians(e.h)
    dx, dy = o.x - e.x, o.y - e.y
    forward = dx * math.sin(hr) + dy * math.cos(hr)
    left = -dx * math.cos(hr) + dy * math.sin(hr)
    if forward > abs(left):
        return "front"
    if -forward > abs(left):
        return "rear"
    return "left" if left > 0 else "right"


def near_boundary(e, o, eps=1e-9):
    hr = math.radians(e.h)
    dx, dy = o.x - e.x, o.y - e.y
    forward = dx * math.sin(hr) + dy * math.cos(hr)
    left = -dx * math.cos(hr) + dy * math.sin(hr)
    return abs(abs(forward) - abs(left)) < eps or (abs(left) < eps and forward < 0)


def ego(x=0.0, y=0.0, h=0.0):
    return make_record(id="AV001", x=x, y=y, h=h)


def obj(x, y, **kw):
    kw.setdefault("id", "V002")
    return make_record(x=x, y=y, **kw)


# --- direction angle --------------------------------------------------------

def test_angle_straight_ahead_is_zero():
    assert direction_angle(ego(), obj(0.0, 10.0)) == pytest.approx(0.0, abs=1e-12)


def test_angle_east_of_north_facing_ego_is_minus_ninety():
    assert direction_angle(ego(), obj(10.0, 0.0)) == pytest.approx(-90.0)


def test_angle_west_of_north_facing_ego_is_plus_ninety():
    assert direction_angle(ego(), obj(-10.0, 0.0)) == pytest.approx(90.0)


def test_angle_straight_behind_is_positive_180():
    assert direction_angle(ego(), obj(0.0, -10.0)) == pytest.approx(180.0)


def test_angle_respects_ego_heading():
    # ego faces east; an object to the north is on its left
    assert direction_angle(ego(h=90.0), obj(0.0, 10.0)) == pytest.approx(90.0)


def test_angle_coincident_positions_rejected():
    with pytest.raises(GraphError, match="coincident"):
        direction_angle(ego(), obj(0.0, 0.0))


def test_angle_range():
    rng = random.Random(3)
    for _ in range(500):
        e = ego(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(0, 360))
        o = obj(rng.uniform(-100, 100), rng.uniform(-100, 100))
        if (e.x, e.y) == (o.x, o.y):
            continue
        theta = direction_angle(e, o)
        assert -180.0 < theta <= 180.0


# --- spatial relation bins ---------------------------------------------------

@pytest.mark.parametrize(
    "theta,expected",
    [
        (0.0, "front"),
        (45.0, "front"),
        (45.0001, "left"),
        (135.0, "left"),
        (135.0001, "rear"),
        (180.0, "rear"),
        (-179.9999, "rear"),
        (-135.0, "rear"),
        (-134.9999, "right"),
        (-45.0, "right"),
        (-44.9999, "front"),
    ],
)
def test_bin_boundaries_half_open(theta, expected):
    assert spatial_relation(theta) == expected


def test_bins_partition_the_circle():
    for i in range(-17999, 18001):
        theta = i / 100.0
        assert spatial_relation(theta) in ("front", "rear", "left", "right")


def test_composed_relation_matches_body_frame_oracle():
    rng = random.Random(1234)
    checked = 0
    for _ in range(2000):
        e = ego(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(0.0, 360.0))
        o = obj(rng.uniform(-100, 100), rng.uniform(-100, 100))
        if (e.x, e.y) == (o.x, o.y) or near_boundary(e, o):
            continue
        assert spatial_relation(direction_angle(e, o)) == quadrant_oracle(e, o)
        checked += 1
    assert checked > 1900


# --- lane topology ------------------------------------------------------------

def test_leftlane_literal_indices():
    e = make_record(id="AV001", rd="R1", lx=2)
    o = make_record(id="V002", rd="R1", lx=1)
    assert lane_relation(e, o) == "leftlane"


def test_samelane():
    e = make_record(id="AV001", rd="R1", lx=0)
    o = make_record(id="V002", rd="R1", lx=0)
    assert lane_relation(e, o) == "samelane"


def test_different_roads_no_lane_relation():
    e = make_record(id="AV001", rd="R1", lx=0)
    o = make_record(id="V002", rd="R2", lx=0)
    assert lane_relation(e, o) is None


def test_far_lanes_no_relation():
    e = make_record(id="AV001", rd="R1", lx=0)
    o = make_record(id="V002", rd="R1", lx=2)
    assert lane_relation(e, o) is None


def test_lane_relation_antisymmetric():
    rng = random.Random(7)
    for _ in range(500):
        e = make_record(id="AV001", rd=rng.choice(["R1", "R2"]), lx=rng.randrange(4))
        o = make_record(id="V002", rd=rng.choice(["R1", "R2"]), lx=rng.randrange(4))
        assert (lane_relation(e, o) == "leftlane") == (lane_relation(o, e) == "rightlane")


# --- graph construction --------------------------------------------------------

def test_graph_radius_inclusive(network):
    e = make_record(id="AV001", x=0.0, y=0.0)
    at_limit = make_record(id="V002", x=100.0, y=0.0)
    beyond = make_record(id="V003", x=100.5, y=0.0)
    scene = make_scene([e, at_limit, beyond], network)
    g = build_graph(scene, "AV001")
    assert [edge.obj.id for edge in g.edges] == ["V002"]


def test_graph_fixture_relations(network):
    e = make_record(id="AV001", x=0.0, y=0.0, h=0.0, rd="R1", lx=1)
    truck = make_record(id="V002", x=0.0, y=20.0, h=0.0, rd="R1", lx=1, ty="truck")
    scene = make_scene([e, truck], network)
    edge = build_graph(scene, "AV001").edge("V002")
    assert edge.relations == {"front", "samelane", "road(R1)"}
    assert edge.dist == pytest.approx(20.0)


def test_graph_lone_ego_has_no_edges(network):
    scene = make_scene([make_record(id="AV001")], network)
    assert build_graph(scene, "AV001").edges == ()


def test_graph_requires_known_av_ego(network):
    scene = make_scene([make_record(id="AV001"), make_record(id="V002", x=5.0)], network)
    with pytest.raises(GraphError, match="unknown ego"):
        build_graph(scene, "AV999")
    with pytest.raises(GraphError, match="AV-prefixed"):
        build_graph(scene, "V002")


def test_graph_edges_match_brute_force(scenes):
    for scene in scenes[::10]:
        for ego_id in scene.av_ids():
            g = build_graph(scene, ego_id)
            e = scene.get(ego_id)
            expected = sorted(
                (o.id for o in scene.objects if o.id != ego_id and distance(e, o) <= 100.0),
            )
            assert sorted(edge.obj.id for edge in g.edges) == expected


def test_graph_edges_sorted_by_distance(scenes):
    scene = scenes[-1]
    g = build_graph(scene, scene.av_ids()[0])
    dists = [edge.dist for edge in g.edges]
    assert dists == sorted(dists)


def test_every_edge_has_one_spatial_and_at_most_one_lane(scenes):
    for scene in scenes[::10]:
        for ego_id in scene.av_ids():
            for edge in build_graph(scene, ego_id).edges:
                assert edge.spatial in ("front", "rear", "left", "right")
                assert edge.lane in (None, "leftlane", "rightlane", "samelane")
                assert edge.dist <= 100.0


# --- attributed graph -------------------------------------------------------

def graph_with_truck(network):
    e = make_record(id="AV001", x=0.0, y=0.0, rd="R1", lx=2)
    truck = make_record(id="truck1", x=3.5, y=10.0, rd="R1", lx=1, ty="truck", co="yellow")
    return build_graph(make_scene([e, truck], network), "AV001")


def test_masked_attribute_retrievable(network):
    aer = build_attributed_graph(graph_with_truck(network), mask=("truck1", "co"))
    assert aer.masked_value() == "yellow"


def test_random_mask_deterministic(network):
    g = graph_with_truck(network)
    a = build_attributed_graph(g, seed=7)
    b = build_attributed_graph(g, seed=7)
    assert a.masked == b.masked


def test_mask_nonexistent_attribute_rejected(network):
    with pytest.raises(GraphError, match="no attribute"):
        build_attributed_graph(graph_with_truck(network), mask=("truck1", "nonexistent"))


def test_mask_unknown_entity_rejected(network):
    with pytest.raises(GraphError, match="unknown entity"):
        build_attributed_graph(graph_with_truck(network), mask=("ghost", "co"))


def test_attributes_follow_object_fields(network):
    aer = build_attributed_graph(graph_with_truck(network))
    attrs = aer.attributes["truck1"]
    assert attrs["ty"] == "truck"
    assert attrs["co"] == "yellow"
    assert attrs["size"] == [attrs["le"], attrs["wi"], attrs["he"]]
