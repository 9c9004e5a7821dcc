"""Fixed-timestep world: robots, controllers, camera and attachments.

All state mutation happens inside tick(), on whatever thread drives the
world; external callers submit closures through enqueue(), which the next
tick drains in arrival order.  Ticking uses no wall clock and no RNG, so
a given command sequence always reproduces the same trajectory.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..control import (
    FINGER_MAX_OPENING,
    EffortControllerConfig,
    PositionControllerConfig,
    RobotState,
    is_settled,
    new_state,
    step_effort,
    step_position,
)
from ..errors import ConfigError
from ..kinematics import (
    KinematicModel,
    Pose,
    clamp_to_limits,
    link_frames,
    load_model,
)
from .grasp import GraspPhase, GraspSequence
from .scene import NOT_DUE, Scenario, Scene, perceive

#: An object can be pinched once the tool centre is this close, metres.
GRASP_CAPTURE_RADIUS = 0.03


@dataclass
class RobotUnit:
    name: str
    model: KinematicModel
    mount: Pose
    position_config: PositionControllerConfig
    effort_config: EffortControllerConfig
    state: RobotState
    grasp: GraspSequence
    attached_object: str | None = None
    _grasp_offset: np.ndarray | None = None
    _mount_transform: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._mount_transform = self.mount.transform()

    @property
    def mount_transform(self) -> np.ndarray:
        return self._mount_transform

    def settled(self) -> bool:
        return is_settled(self.state, self.position_config)

    def tcp_transform(self) -> np.ndarray:
        frames = link_frames(self.model, self.state.q)
        return self._mount_transform @ frames[-1] @ self.model.tool

    def link_points(self) -> list[np.ndarray]:
        frames = link_frames(self.model, self.state.q)
        return [(self._mount_transform @ f)[:3, 3] for f in frames[1:]]


class World:
    def __init__(self, scenario: Scenario, robots: list[str] | None = None):
        self.scenario = scenario
        self.scene: Scene = scenario.scene
        self.dt = scenario.dt
        self.sim_time = 0.0
        self.latest_perception = None
        self.last_perception_time: float | None = None
        self._commands: deque = deque()
        self._lock = threading.Lock()
        self.units: dict[str, RobotUnit] = {}
        names = robots if robots is not None else sorted(self.scene.mounts)
        for name in names:
            if name not in self.scene.mounts:
                raise ConfigError(f"scenario has no mount for robot {name!r}")
            model = load_model(name)
            self.units[name] = RobotUnit(
                name=name,
                model=model,
                mount=self.scene.mounts[name],
                position_config=scenario.position_config,
                effort_config=scenario.effort_config,
                state=new_state(model.home),
                grasp=GraspSequence(theta_drop=scenario.theta_drop),
            )

    # -- command interface (thread safe) --

    def enqueue(self, command) -> None:
        """Queue a closure; the next tick applies it before stepping."""
        with self._lock:
            self._commands.append(command)

    def unit(self, name: str) -> RobotUnit:
        return self.units[name]

    # -- attachments --

    def attach_object(self, unit: RobotUnit, object_id: str) -> None:
        obj = self.scene.object_by_id(object_id)
        tcp = unit.tcp_transform()
        offset = np.linalg.solve(tcp, np.append(obj.position, 1.0))
        obj.attached_to = unit.name
        unit.attached_object = object_id
        unit._grasp_offset = offset

    def release_object(self, unit: RobotUnit) -> None:
        """Let go: the object falls straight down onto table or floor."""
        if unit.attached_object is None:
            return
        obj = self.scene.object_by_id(unit.attached_object)
        position = unit.tcp_transform() @ unit._grasp_offset
        x, y = float(position[0]), float(position[1])
        unit.attached_object = None
        unit._grasp_offset = None
        obj.attached_to = None
        if self.scene.table.contains_xy(x, y):
            obj.rest_at(x, y, self.scene.table.top)
        else:
            obj.rest_at(x, y, 0.0)

    # -- stepping --

    def _drain_commands(self):
        with self._lock:
            commands = list(self._commands)
            self._commands.clear()
        for command in commands:
            command(self)

    def _update_perception(self):
        if (
            self.last_perception_time is not None
            and self.sim_time - self.last_perception_time
            < self.scenario.perception_period
        ):
            return
        points = {name: unit.link_points() for name, unit in self.units.items()}
        batch = perceive(
            self.scene,
            points,
            self.sim_time,
            self.last_perception_time,
            self.scenario.perception_period,
        )
        if batch is not NOT_DUE:
            self.latest_perception = batch
            self.last_perception_time = self.sim_time

    def _grasp_candidate(self, unit: RobotUnit):
        """The object currently between the fingers, if any."""
        if unit.attached_object is not None:
            return self.scene.object_by_id(unit.attached_object)
        if unit.grasp.phase is GraspPhase.GRASP and unit.grasp.plan is not None:
            obj = self.scene.object_by_id(unit.grasp.plan.target_id)
            if obj.attached_to is None:
                tcp = unit.tcp_transform()[:3, 3]
                if np.linalg.norm(tcp - obj.position) <= GRASP_CAPTURE_RADIUS:
                    return obj
        return None

    def tick(self) -> None:
        self._drain_commands()
        self.sim_time += self.dt
        self._update_perception()
        for unit in self.units.values():
            unit.grasp.tick(self, unit, self.sim_time)
        for unit in self.units.values():
            step_position(unit.state, unit.position_config, self.dt)
            candidate = self._grasp_candidate(unit)
            width = candidate.grasp_width if candidate is not None else None
            step_effort(unit.state, unit.effort_config, width, self.dt)
            if candidate is not None:
                if unit.state.holding and unit.attached_object is None:
                    self.attach_object(unit, candidate.id)
                elif unit.attached_object is not None and not unit.state.holding:
                    self.release_object(unit)

    def run(self, seconds: float) -> None:
        """Advance simulated time by ``seconds`` in dt steps."""
        for _ in range(round(seconds / self.dt)):
            self.tick()

    # -- session-facing setters (call via enqueue when bridged) --

    def set_joint_setpoint(self, robot: str, joint: int, radians: float) -> None:
        unit = self.units[robot]
        lo, hi = unit.model.limits[joint]
        unit.state.q_setpoint[joint] = min(max(radians, lo), hi)

    def set_joint_vector(self, robot: str, q) -> None:
        unit = self.units[robot]
        unit.state.q_setpoint = clamp_to_limits(unit.model, q)

    def set_finger_setpoint(self, robot: str, side: int, metres: float) -> None:
        unit = self.units[robot]
        unit.state.finger_setpoint[side] = min(max(metres, 0.0), FINGER_MAX_OPENING)

    def start_grasp(self, robot: str) -> GraspSequence:
        unit = self.units[robot]
        unit.grasp.start(unit, self.sim_time)
        return unit.grasp

    def stop_grasp(self, robot: str) -> GraspSequence:
        unit = self.units[robot]
        unit.grasp.stop(self, unit, self.sim_time)
        return unit.grasp


class RtfTracker:
    """Real-time factor over a sliding wall-clock window."""

    def __init__(self, window: float = 5.0, min_span: float = 1.0):
        self.window = window
        self.min_span = min_span
        self._samples: deque[tuple[float, float]] = deque()

    def record(self, wall: float, sim: float) -> None:
        self._samples.append((wall, sim))
        while self._samples and wall - self._samples[0][0] > self.window:
            self._samples.popleft()

    @property
    def ready(self) -> bool:
        return (
            len(self._samples) >= 2
            and self._samples[-1][0] - self._samples[0][0] >= self.min_span
        )

    def ratio(self) -> float:
        if not self.ready:
            raise ValueError("need at least %.1f s of samples" % self.min_span)
        wall0, sim0 = self._samples[0]
        wall1, sim1 = self._samples[-1]
        return (sim1 - sim0) / (wall1 - wall0)
