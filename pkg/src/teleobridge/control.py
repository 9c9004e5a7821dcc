"""Simulated joint and gripper controllers.

Joints follow a first-order law: commanded velocity is the position error
times a gain, clipped to a velocity limit, and integration truncates at
the setpoint so the response never overshoots.  Fingers track their
setpoints at constant speed; when an object sits between them each finger
stops at the surface and develops a spring force against its remaining
virtual travel.  A grasp is "holding" once both finger forces stay at or
above a threshold for a continuous hold time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError

#: Full travel of each finger away from the gripper centre, metres.
FINGER_MAX_OPENING = 0.04


@dataclass(frozen=True)
class PositionControllerConfig:
    gain: float = 10.0  # 1/s
    velocity_limit: float = math.pi  # rad/s
    settle_tolerance: float = 1e-4  # rad

    def __post_init__(self):
        if min(self.gain, self.velocity_limit, self.settle_tolerance) <= 0:
            raise ModelError("controller parameters must be positive")


@dataclass(frozen=True)
class EffortControllerConfig:
    stiffness: float = 500.0  # N/m
    max_force: float = 20.0  # N
    hold_force_threshold: float = 2.0  # N
    hold_time: float = 0.2  # s
    finger_speed: float = 0.05  # m/s

    def __post_init__(self):
        if min(self.stiffness, self.max_force, self.hold_time, self.finger_speed) <= 0:
            raise ModelError("effort parameters must be positive")
        if not 0 < self.hold_force_threshold < self.max_force:
            raise ModelError("hold threshold must sit inside (0, max_force)")


@dataclass
class RobotState:
    """Mutable simulation state for one arm plus its gripper.

    ``finger_command`` is the virtual finger coordinate that tracks the
    setpoint; ``finger_position`` is the physical opening, which cannot
    pass through an object surface.
    """

    q: np.ndarray
    q_setpoint: np.ndarray
    finger_command: np.ndarray = field(
        default_factory=lambda: np.full(2, FINGER_MAX_OPENING)
    )
    finger_setpoint: np.ndarray = field(
        default_factory=lambda: np.full(2, FINGER_MAX_OPENING)
    )
    finger_position: np.ndarray = field(
        default_factory=lambda: np.full(2, FINGER_MAX_OPENING)
    )
    finger_force: np.ndarray = field(default_factory=lambda: np.zeros(2))
    hold_elapsed: float = 0.0
    holding: bool = False

    def copy(self) -> "RobotState":
        return RobotState(
            q=self.q.copy(),
            q_setpoint=self.q_setpoint.copy(),
            finger_command=self.finger_command.copy(),
            finger_setpoint=self.finger_setpoint.copy(),
            finger_position=self.finger_position.copy(),
            finger_force=self.finger_force.copy(),
            hold_elapsed=self.hold_elapsed,
            holding=self.holding,
        )


def new_state(q0) -> RobotState:
    q0 = np.array(q0, dtype=float)
    return RobotState(q=q0, q_setpoint=q0.copy())


def step_position(
    state: RobotState, config: PositionControllerConfig, dt: float
) -> RobotState:
    """Advance joints one tick toward the setpoint. Mutates and returns state."""
    if dt <= 0:
        raise ModelError("dt must be positive")
    error = state.q_setpoint - state.q
    velocity = np.clip(config.gain * error, -config.velocity_limit, config.velocity_limit)
    step = velocity * dt
    # Truncate at the setpoint so a large gain*dt cannot overshoot.
    overshoot = np.abs(step) >= np.abs(error)
    state.q = np.where(overshoot, state.q_setpoint, state.q + step)
    return state


def is_settled(state: RobotState, config: PositionControllerConfig) -> bool:
    return bool(np.max(np.abs(state.q_setpoint - state.q)) <= config.settle_tolerance)


def step_effort(
    state: RobotState,
    config: EffortControllerConfig,
    object_width: float | None,
    dt: float,
    contact: tuple[bool, bool] = (True, True),
) -> RobotState:
    """Advance fingers one tick. Mutates and returns state.

    ``object_width`` is the width of the object between the fingers, or
    None when nothing is graspable.  ``contact`` marks fingers that can
    actually touch the surface; a blocked finger never builds force, so a
    grasp can only hold when both fingers press.
    """
    if dt <= 0:
        raise ModelError("dt must be positive")
    error = state.finger_setpoint - state.finger_command
    limit = config.finger_speed * dt
    state.finger_command = state.finger_command + np.clip(error, -limit, limit)

    if object_width is None:
        state.finger_position = state.finger_command.copy()
        state.finger_force = np.zeros(2)
    else:
        if object_width <= 0:
            raise ModelError("object width must be positive")
        half = object_width / 2.0
        position = state.finger_command.copy()
        force = np.zeros(2)
        for i in (0, 1):
            if contact[i]:
                position[i] = max(position[i], half)
                interpenetration = max(0.0, half - state.finger_command[i])
                force[i] = min(config.stiffness * interpenetration, config.max_force)
        state.finger_position = position
        state.finger_force = force

    if np.all(state.finger_force >= config.hold_force_threshold):
        state.hold_elapsed += dt
    else:
        state.hold_elapsed = 0.0
    state.holding = state.hold_elapsed >= config.hold_time
    return state
