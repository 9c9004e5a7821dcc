"""Autonomous pick-and-place sequencing for one arm.

The sequence advances through perceive, plan, approach, grasp, lift,
transport, place and retreat.  Transport carries a deterministic drop
rule: when the planned joint travel of the transport move exceeds a
threshold, the object detaches halfway through and the attempt fails.
Stopping at any point drops whatever is held and homes the arm.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..control import FINGER_MAX_OPENING
from ..errors import PlanError
from ..kinematics import solution_complexity
from .planner import Plan, plan_pick_place

#: Give up on grasping if the hold has not engaged after this long.
GRASP_TIMEOUT = 3.0
#: Give up waiting for a usable detection after this long.
PERCEIVE_TIMEOUT = 12.0
#: Safety timeout for any single waypoint move.
WAYPOINT_TIMEOUT = 20.0


class GraspPhase(enum.Enum):
    IDLE = "idle"
    PERCEIVE = "perceive"
    PLAN = "plan"
    APPROACH = "approach"
    GRASP = "grasp"
    LIFT = "lift"
    TRANSPORT = "transport"
    PLACE = "place"
    RETREAT = "retreat"
    DONE = "done"
    STOPPED = "stopped"
    FAILED = "failed"


ACTIVE_PHASES = frozenset(
    {
        GraspPhase.PERCEIVE,
        GraspPhase.PLAN,
        GraspPhase.APPROACH,
        GraspPhase.GRASP,
        GraspPhase.LIFT,
        GraspPhase.TRANSPORT,
        GraspPhase.PLACE,
        GraspPhase.RETREAT,
    }
)


@dataclass
class GraspFlags:
    perceived: bool = False
    planned: bool = False
    grasped: bool = False
    placed: bool = False

    def bitmask(self) -> int:
        return (
            (1 if self.perceived else 0)
            | (2 if self.planned else 0)
            | (4 if self.grasped else 0)
            | (8 if self.placed else 0)
        )

    def reset(self):
        self.perceived = self.planned = self.grasped = self.placed = False


@dataclass
class GraspSequence:
    """State machine driving one robot unit inside the world tick."""

    theta_drop: float
    phase: GraspPhase = GraspPhase.IDLE
    flags: GraspFlags = field(default_factory=GraspFlags)
    failure_reason: str | None = None
    plan: Plan | None = None
    target_id: str | None = None
    phase_history: list[str] = field(default_factory=list)
    _phase_since: float = 0.0
    _target = None
    _transport_start_q: np.ndarray | None = None
    _place_opening: bool = False

    def start(self, unit, now: float):
        self.flags.reset()
        self.failure_reason = None
        self.plan = None
        self.target_id = None
        self._target = None
        self._transport_start_q = None
        self._place_opening = False
        self.phase_history = []
        unit.state.finger_setpoint = np.full(2, FINGER_MAX_OPENING)
        self._transition(GraspPhase.PERCEIVE, now)

    def stop(self, world, unit, now: float):
        """Operator stop: drop anything held, home the arm."""
        world.release_object(unit)
        self._home(unit)
        self._transition(GraspPhase.STOPPED, now)

    def _home(self, unit):
        unit.state.q_setpoint = np.array(unit.model.home)
        unit.state.finger_setpoint = np.full(2, FINGER_MAX_OPENING)

    def _transition(self, phase: GraspPhase, now: float):
        self.phase = phase
        self._phase_since = now
        self.phase_history.append(phase.value)

    def _fail(self, world, unit, reason: str, now: float):
        world.release_object(unit)
        self._home(unit)
        self.failure_reason = reason
        self._transition(GraspPhase.FAILED, now)

    def _set_waypoint(self, unit, label: str):
        unit.state.q_setpoint = self.plan.waypoint(label).q.copy()

    def tick(self, world, unit, now: float):
        phase = self.phase
        if phase not in ACTIVE_PHASES:
            return
        in_phase = now - self._phase_since

        if phase is GraspPhase.PERCEIVE:
            batch = world.latest_perception
            if batch:
                real = [d for d in batch if not d.spurious]
                if real:
                    mount = np.array(unit.mount.position[:2])
                    real.sort(
                        key=lambda d: (
                            float(np.linalg.norm(np.array(d.position[:2]) - mount)),
                            d.id,
                        )
                    )
                    self._target = real[0]
                    self.target_id = real[0].id
                    self.flags.perceived = True
                    self._transition(GraspPhase.PLAN, now)
                    return
            if in_phase > PERCEIVE_TIMEOUT:
                self._fail(world, unit, "no_target", now)
            return

        if phase is GraspPhase.PLAN:
            try:
                self.plan = plan_pick_place(
                    world.scene, unit.model, unit.mount, unit.state.q, self._target
                )
            except PlanError as exc:
                self._fail(world, unit, exc.reason, now)
                return
            self.flags.planned = True
            self._set_waypoint(unit, "pre_grasp")
            unit.state.finger_setpoint = np.full(2, FINGER_MAX_OPENING)
            self._transition(GraspPhase.APPROACH, now)
            return

        if in_phase > WAYPOINT_TIMEOUT:
            self._fail(world, unit, "stuck", now)
            return

        if phase is GraspPhase.APPROACH:
            if not unit.settled():
                return
            at_grasp = np.allclose(
                unit.state.q_setpoint, self.plan.waypoint("grasp").q
            )
            if not at_grasp:
                self._set_waypoint(unit, "grasp")
                return
            unit.state.finger_setpoint = np.zeros(2)
            self._transition(GraspPhase.GRASP, now)
            return

        if phase is GraspPhase.GRASP:
            if unit.attached_object is not None:
                self.flags.grasped = True
                self._set_waypoint(unit, "lift")
                self._transition(GraspPhase.LIFT, now)
            elif in_phase > GRASP_TIMEOUT:
                self._fail(world, unit, "grasp_timeout", now)
            return

        if phase is GraspPhase.LIFT:
            if not unit.settled():
                return
            self._transport_start_q = unit.state.q.copy()
            self._set_waypoint(unit, "transport")
            self._transition(GraspPhase.TRANSPORT, now)
            return

        if phase is GraspPhase.TRANSPORT:
            transport = self.plan.waypoint("transport")
            if transport.travel > self.theta_drop and unit.attached_object is not None:
                progress = solution_complexity(self._transport_start_q, unit.state.q)
                if progress >= transport.travel / 2.0:
                    world.release_object(unit)
                    self._fail(world, unit, "dropped", now)
                    return
            if unit.settled():
                self._set_waypoint(unit, "place")
                self._place_opening = False
                self._transition(GraspPhase.PLACE, now)
            return

        if phase is GraspPhase.PLACE:
            if not self._place_opening:
                if unit.settled():
                    unit.state.finger_setpoint = np.full(2, FINGER_MAX_OPENING)
                    self._place_opening = True
                return
            if unit.attached_object is not None:
                return
            obj = world.scene.object_by_id(self.plan.target_id)
            if world.scene.drop_zone.contains_xy(obj.position[0], obj.position[1]):
                self.flags.placed = True
                self._set_waypoint(unit, "retreat")
                self._transition(GraspPhase.RETREAT, now)
            else:
                self._fail(world, unit, "missed_drop", now)
            return

        if phase is GraspPhase.RETREAT:
            if unit.settled():
                self._transition(GraspPhase.DONE, now)
