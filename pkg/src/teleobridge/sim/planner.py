"""Waypoint planning for the pick-and-place sequence.

A plan is six tool waypoints: pre-grasp above the object, grasp, lift,
transport above the drop zone, place, and retreat to the home pose.  Each
waypoint is solved to joints with IK seeded by the previous solution, and
straight segments between consecutive waypoint positions are checked
against the scene's collision cube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PlanError
from ..kinematics import (
    IkParams,
    KinematicModel,
    Pose,
    forward_kinematics,
    inverse_kinematics,
    solution_complexity,
)
from .scene import Box, PerceivedObject, Scene

#: Hover height above the grasp point, metres.
PRE_GRASP_CLEARANCE = 0.10
#: Lift height above the grasp point before the transport move, metres.
LIFT_CLEARANCE = 0.15

#: Tool-down orientation (tool z pointing at the floor), world frame.
TOOL_DOWN = np.array([1.0, 0.0, 0.0, 0.0])

WAYPOINT_LABELS = ("pre_grasp", "grasp", "lift", "transport", "place", "retreat")


@dataclass(frozen=True)
class PlanWaypoint:
    label: str
    pose: Pose  # world frame
    q: np.ndarray
    travel: float  # joint travel from the previous waypoint


@dataclass(frozen=True)
class Plan:
    target_id: str
    object_width: float
    object_height: float
    waypoints: tuple[PlanWaypoint, ...]

    @property
    def max_travel(self) -> float:
        return max(w.travel for w in self.waypoints)

    def waypoint(self, label: str) -> PlanWaypoint:
        for w in self.waypoints:
            if w.label == label:
                return w
        raise KeyError(label)


def segment_intersects_box(p0, p1, box: Box) -> bool:
    """Slab test: does the closed segment p0-p1 meet the axis-aligned box?"""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    direction = p1 - p0
    lo, hi = box.lo, box.hi
    t_enter, t_exit = 0.0, 1.0
    for axis in range(3):
        if abs(direction[axis]) < 1e-12:
            if p0[axis] < lo[axis] or p0[axis] > hi[axis]:
                return False
            continue
        t0 = (lo[axis] - p0[axis]) / direction[axis]
        t1 = (hi[axis] - p0[axis]) / direction[axis]
        if t0 > t1:
            t0, t1 = t1, t0
        t_enter = max(t_enter, t0)
        t_exit = min(t_exit, t1)
        if t_enter > t_exit:
            return False
    return True


def plan_pick_place(
    scene: Scene,
    model: KinematicModel,
    mount: Pose,
    current_q,
    target: PerceivedObject,
    ik_params: IkParams = IkParams(),
) -> Plan:
    """Build and solve the six-waypoint plan, or raise PlanError."""
    if target.spurious:
        raise PlanError("spurious_target", f"{target.id} is not a real object")
    current_q = np.asarray(current_q, dtype=float)
    grasp_point = np.array(target.position)
    drop = scene.drop_zone
    place_point = np.array(
        [drop.center[0], drop.center[1], drop.top + target.dimensions[2] / 2.0]
    )
    lift_z = grasp_point[2] + LIFT_CLEARANCE
    transport_z = max(lift_z, place_point[2] + LIFT_CLEARANCE)

    home_world = Pose.from_transform(
        mount.transform() @ forward_kinematics(model, model.home).transform()
    )
    cartesian = {
        "pre_grasp": grasp_point + [0.0, 0.0, PRE_GRASP_CLEARANCE],
        "grasp": grasp_point,
        "lift": np.array([grasp_point[0], grasp_point[1], lift_z]),
        "transport": np.array([place_point[0], place_point[1], transport_z]),
        "place": place_point,
        "retreat": home_world.position,
    }

    # Geometry first: straight tool paths must clear the collision cube
    # before any IK effort is spent.
    for before, after in zip(WAYPOINT_LABELS, WAYPOINT_LABELS[1:]):
        if segment_intersects_box(
            cartesian[before], cartesian[after], scene.collision_cube
        ):
            raise PlanError(
                "collision",
                f"segment {before} to {after} crosses the collision cube",
            )

    base_from_world = np.linalg.inv(mount.transform())
    waypoints: list[PlanWaypoint] = []
    seed = current_q
    for label in WAYPOINT_LABELS:
        if label == "retreat":
            pose_world = home_world
            q = np.array(model.home)
        else:
            pose_world = Pose(cartesian[label], TOOL_DOWN)
            target_base = Pose.from_transform(base_from_world @ pose_world.transform())
            result = inverse_kinematics(model, target_base, seed, ik_params)
            if not result.converged:
                raise PlanError("unreachable", f"waypoint {label} is out of reach")
            q = result.q
        travel = solution_complexity(seed, q)
        waypoints.append(PlanWaypoint(label, pose_world, q, travel))
        seed = q

    return Plan(
        target_id=target.id,
        object_width=target.grasp_width,
        object_height=target.dimensions[2],
        waypoints=tuple(waypoints),
    )
