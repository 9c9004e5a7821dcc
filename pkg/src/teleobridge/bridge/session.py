"""Per-connection command dispatch.

A session tracks what one operator connection has selected (robot, mode,
buffered pose components) and turns each incoming frame into a list of
effects for the service to apply: setpoint changes, sequence commands,
echoes and error replies.  Frames that arrive before their prerequisites
produce an error reply and nothing else.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ModelError, ProtocolError
from ..kinematics import KinematicModel, Pose, inverse_kinematics
from ..wire import (
    FINGER_TAGS,
    JOINT_TAGS,
    MODE_TAGS,
    POSE_TAGS,
    ROBOT_TAGS,
    TAG_START,
    TAG_STOP,
    ScaleConfig,
    WireFrame,
    decode_angle,
    decode_gripper,
    decode_scaled,
    tag_group,
)

#: Modes that accept per-joint angle frames.
JOINT_MODES = frozenset({1, 3})
#: Modes that accept finger frames (the autonomous mode leaves the fingers
#: to the sequencer but still lets the operator override them).
GRIPPER_MODES = frozenset({1, 3, 4})
POSE_MODE = 2
AUTONOMY_MODE = 4

POSE_COMPONENTS = ("x", "y", "z", "qx", "qy", "qz", "qw")


class ErrorCode(enum.IntEnum):
    """Values carried by an error-reply frame."""

    MALFORMED = 1
    NO_ROBOT = 2
    NO_MODE = 3
    WRONG_MODE = 4
    UNKNOWN_JOINT = 5
    INCOMPLETE_POSE = 6
    UNREACHABLE_POSE = 7
    BAD_VALUE = 8
    NOT_ALLOWED = 9


# -- effects ---------------------------------------------------------------


@dataclass(frozen=True)
class SetJoint:
    robot: str
    joint: int
    radians: float


@dataclass(frozen=True)
class SetFingers:
    robot: str
    side: int
    metres: float


@dataclass(frozen=True)
class SetJointVector:
    robot: str
    q: tuple[float, ...]


@dataclass(frozen=True)
class StartSequence:
    robot: str


@dataclass(frozen=True)
class StopSequence:
    robot: str


@dataclass(frozen=True)
class Echo:
    frame: WireFrame


@dataclass(frozen=True)
class ErrorReply:
    code: ErrorCode
    detail: str


Effect = (
    SetJoint
    | SetFingers
    | SetJointVector
    | StartSequence
    | StopSequence
    | Echo
    | ErrorReply
)


class Session:
    """Dispatch state for one operator connection.

    ``current_q`` supplies the live joint vector used to seed IK on
    Confirm; it defaults to each model's home configuration so a session
    can be exercised without a world behind it.
    """

    def __init__(
        self,
        models: dict[str, KinematicModel],
        scale: ScaleConfig = ScaleConfig(100),
        current_q: Callable[[str], np.ndarray] | None = None,
        connection_id: int = 0,
    ):
        self.models = models
        self.scale = scale
        self.current_q = current_q or (lambda robot: np.array(models[robot].home))
        self.connection_id = connection_id
        self.robot: str | None = None
        self.mode: int | None = None
        self.pose_buffer: dict[str, float] = {}
        self.last_activity: float = 0.0

    # -- helpers --

    def _reject(self, code: ErrorCode, detail: str) -> list[Effect]:
        return [ErrorReply(code, detail)]

    def _gate(self, required_modes: frozenset[int] | None = None) -> list[Effect]:
        """Common prerequisite checks; empty list means the gate is open."""
        if self.robot is None:
            return self._reject(ErrorCode.NO_ROBOT, "select a robot first")
        if self.mode is None:
            return self._reject(ErrorCode.NO_MODE, "select a mode first")
        if required_modes is not None and self.mode not in required_modes:
            return self._reject(
                ErrorCode.WRONG_MODE,
                f"command not available in mode {self.mode}",
            )
        return []

    # -- dispatch --

    def handle_frame(self, frame: WireFrame, now: float = 0.0) -> list[Effect]:
        self.last_activity = now
        group = tag_group(frame.tag)
        handler = getattr(self, f"_on_{group}")
        return handler(frame)

    def _on_echo(self, frame: WireFrame) -> list[Effect]:
        return [Echo(frame)]

    def _on_telemetry(self, frame: WireFrame) -> list[Effect]:
        return self._reject(
            ErrorCode.NOT_ALLOWED, f"tag {frame.tag} is bridge-to-operator only"
        )

    def _on_robot_select(self, frame: WireFrame) -> list[Effect]:
        name = ROBOT_TAGS[frame.tag]
        if name != self.robot:
            # a new arm means the half-entered pose no longer applies
            self.pose_buffer.clear()
        self.robot = name
        return []

    def _on_mode_select(self, frame: WireFrame) -> list[Effect]:
        self.mode = MODE_TAGS[frame.tag]
        return []

    def _on_joint(self, frame: WireFrame) -> list[Effect]:
        blocked = self._gate(JOINT_MODES)
        if blocked:
            return blocked
        joint = JOINT_TAGS[frame.tag]
        model = self.models[self.robot]
        if joint >= model.dof:
            return self._reject(
                ErrorCode.UNKNOWN_JOINT,
                f"{self.robot} has {model.dof} joints, no joint {joint + 1}",
            )
        try:
            degrees = decode_angle(frame.value)
        except ProtocolError as exc:
            return self._reject(ErrorCode.BAD_VALUE, str(exc))
        return [SetJoint(self.robot, joint, math.radians(degrees))]

    def _on_gripper(self, frame: WireFrame) -> list[Effect]:
        blocked = self._gate(GRIPPER_MODES)
        if blocked:
            return blocked
        try:
            millimetres = decode_gripper(frame.value)
        except ProtocolError as exc:
            return self._reject(ErrorCode.BAD_VALUE, str(exc))
        side = FINGER_TAGS[frame.tag]
        return [SetFingers(self.robot, side, millimetres / 1000.0)]

    def _on_pose(self, frame: WireFrame) -> list[Effect]:
        blocked = self._gate(frozenset({POSE_MODE}))
        if blocked:
            return blocked
        try:
            real = decode_scaled(frame.value, self.scale)
        except ProtocolError as exc:
            return self._reject(ErrorCode.BAD_VALUE, str(exc))
        self.pose_buffer[POSE_TAGS[frame.tag]] = real
        return []

    def _on_confirm(self, frame: WireFrame) -> list[Effect]:
        blocked = self._gate(frozenset({POSE_MODE}))
        if blocked:
            return blocked
        missing = [c for c in POSE_COMPONENTS if c not in self.pose_buffer]
        if missing:
            return self._reject(
                ErrorCode.INCOMPLETE_POSE,
                "pose components missing: " + ", ".join(missing),
            )
        buffer = self.pose_buffer
        try:
            target = Pose(
                (buffer["x"], buffer["y"], buffer["z"]),
                (buffer["qx"], buffer["qy"], buffer["qz"], buffer["qw"]),
            )
        except ModelError as exc:
            return self._reject(ErrorCode.BAD_VALUE, str(exc))
        model = self.models[self.robot]
        result = inverse_kinematics(model, target, self.current_q(self.robot))
        if not result.converged:
            # keep the buffer so the operator can correct one field and retry
            return self._reject(
                ErrorCode.UNREACHABLE_POSE,
                f"no joint solution reaches the confirmed pose for {self.robot}",
            )
        return [SetJointVector(self.robot, tuple(float(v) for v in result.q))]

    def _on_autonomy(self, frame: WireFrame) -> list[Effect]:
        blocked = self._gate(frozenset({AUTONOMY_MODE}))
        if blocked:
            return blocked
        if frame.tag == TAG_START:
            return [StartSequence(self.robot)]
        assert frame.tag == TAG_STOP
        return [StopSequence(self.robot)]
