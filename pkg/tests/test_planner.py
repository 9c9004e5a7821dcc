import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teleobridge.errors import PlanError
from teleobridge.kinematics import forward_kinematics, load_model, quat_to_matrix
from teleobridge.sim import Box, default_scenario, load_scenario, perceive, plan_pick_place
from teleobridge.sim.planner import (
    LIFT_CLEARANCE,
    PRE_GRASP_CLEARANCE,
    WAYPOINT_LABELS,
    segment_intersects_box,
)
from teleobridge.sim.scene import PerceivedObject


def sampled_intersection(p0, p1, box, steps=2000):
    """Dense-sampling oracle for the slab test."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    for t in np.linspace(0.0, 1.0, steps):
        if box.contains(p0 + t * (p1 - p0)):
            return True
    return False


UNIT_BOX = Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))

SEGMENT_CHECKS = [
    # (p0, p1, hits)
    ((-1, 0, 0), (1, 0, 0), True),  # straight through
    ((-1, 2, 0), (1, 2, 0), False),  # parallel, offset
    ((0, 0, 0), (0, 0, 0), True),  # degenerate point inside
    ((2, 2, 2), (3, 3, 3), False),  # fully outside, away
    ((-1, -1, -1), (1, 1, 1), True),  # diagonal through centre
    ((0.6, -1, 0), (0.6, 1, 0), False),  # grazes past the +x face
    ((0.5, -1, 0), (0.5, 1, 0), True),  # exactly on the +x face
    ((-2, 0, 0), (-0.51, 0, 0), False),  # stops just short
    ((-2, 0, 0), (-0.5, 0, 0), True),  # touches the face endpoint
]


def test_segment_box_frozen_cases():
    for p0, p1, hits in SEGMENT_CHECKS:
        assert segment_intersects_box(p0, p1, UNIT_BOX) is hits, (p0, p1)


@given(
    st.lists(st.floats(-2, 2), min_size=6, max_size=6),
)
@settings(max_examples=200)
def test_segment_box_matches_sampling_oracle(coordinates):
    p0, p1 = coordinates[:3], coordinates[3:]
    slab = segment_intersects_box(p0, p1, UNIT_BOX)
    sampled = sampled_intersection(p0, p1, UNIT_BOX)
    # The sampler can miss razor-thin clips; it must never contradict a
    # slab miss.
    if sampled:
        assert slab
    elif not slab:
        assert not sampled


def detection_for(scenario, object_id="cube1"):
    batch = perceive(scenario.scene, {}, 0.0, None)
    for d in batch:
        if d.id == object_id:
            return d
    raise AssertionError("object not perceived")


def test_plan_structure_and_clearances():
    scenario = default_scenario()
    model = load_model("ur5")
    mount = scenario.scene.mounts["ur5"]
    target = detection_for(scenario)
    plan = plan_pick_place(scenario.scene, model, mount, model.home, target)

    assert tuple(w.label for w in plan.waypoints) == WAYPOINT_LABELS
    grasp = plan.waypoint("grasp")
    pre = plan.waypoint("pre_grasp")
    lift = plan.waypoint("lift")
    place = plan.waypoint("place")
    assert np.allclose(grasp.pose.position, target.position)
    assert pre.pose.position[2] - grasp.pose.position[2] == pytest.approx(
        PRE_GRASP_CLEARANCE
    )
    assert lift.pose.position[2] - grasp.pose.position[2] == pytest.approx(
        LIFT_CLEARANCE
    )
    zone = scenario.scene.drop_zone
    assert place.pose.position[0] == pytest.approx(zone.center[0])
    assert place.pose.position[1] == pytest.approx(zone.center[1])
    assert place.pose.position[2] == pytest.approx(zone.top + 0.02)
    # Tool points down at every grasp-related waypoint.
    for label in ("pre_grasp", "grasp", "lift", "transport", "place"):
        rotation = quat_to_matrix(plan.waypoint(label).pose.orientation)
        assert rotation[2, 2] == pytest.approx(-1.0, abs=1e-9)
    assert plan.object_width == pytest.approx(0.04)
    assert plan.max_travel > 0


def test_plan_waypoints_verify_against_fk():
    scenario = default_scenario()
    model = load_model("ur5")
    mount = scenario.scene.mounts["ur5"]
    target = detection_for(scenario)
    plan = plan_pick_place(scenario.scene, model, mount, model.home, target)
    mount_transform = mount.transform()
    for waypoint in plan.waypoints:
        tool_world = mount_transform @ forward_kinematics(model, waypoint.q).transform()
        assert np.linalg.norm(tool_world[:3, 3] - waypoint.pose.position) < 2e-4


def test_plan_rejects_spurious_target():
    scenario = default_scenario()
    model = load_model("ur5")
    detection = PerceivedObject(
        id="spurious:ur5:3",
        position=(0.0, -0.3, 0.7),
        dimensions=(0.0, 0.0, 0.0),
        spurious=True,
        timestamp=0.0,
    )
    with pytest.raises(PlanError) as info:
        plan_pick_place(
            scenario.scene, model, scenario.scene.mounts["ur5"], model.home, detection
        )
    assert info.value.reason == "spurious_target"


def test_plan_unreachable_target():
    scenario = default_scenario()
    model = load_model("ur5")
    detection = PerceivedObject(
        id="ghost",
        position=(0.35, 0.75, 0.52),  # far corner, beyond UR5 reach envelope
        dimensions=(0.04, 0.04, 0.04),
        spurious=False,
        timestamp=0.0,
    )
    with pytest.raises(PlanError) as info:
        plan_pick_place(
            scenario.scene, model, scenario.scene.mounts["ur5"], model.home, detection
        )
    assert info.value.reason == "unreachable"


def test_plan_collision_when_path_crosses_table_body():
    # Tall table; the object sits on a lower pedestal beside it, so the
    # lift-to-transport line cuts through the table body.
    scenario = load_scenario(
        {
            "table": {"center": [0.0, 0.0, 0.45], "size": [0.8, 1.6, 0.9]},
            "collision_cube": {"center": [0.0, 0.0, 0.44], "size": [0.78, 1.58, 0.88]},
            "camera": {"position": [0.9, 0.0, 1.5], "range": 1.85},
            "drop_zone": {"center": [0.0, -0.3], "size": [0.12, 0.12]},
            "robots": {
                "ur5": {"mount": {"position": [0.0, -0.7, 0.9], "rpy": [0, 0, 0]}}
            },
            "objects": [
                {
                    "id": "shelf_cube",
                    "shape": "box",
                    "dimensions": [0.04, 0.04, 0.04],
                    "position": [0.0, -1.0, 0.57],
                    "support_height": 0.55,
                }
            ],
        }
    )
    model = load_model("ur5")
    target = detection_for(scenario, "shelf_cube")
    with pytest.raises(PlanError) as info:
        plan_pick_place(
            scenario.scene, model, scenario.scene.mounts["ur5"], model.home, target
        )
    assert info.value.reason == "collision"
