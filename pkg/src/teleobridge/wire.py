"""Line-framed tag/value wire protocol.

Every frame is one ASCII line ``"<tag> <value>\\n"`` where both fields are
unsigned decimal integers and the value fits in 16 bits.  Negative
quantities are folded into the unsigned range by an offset convention:

* integer angles in degrees use offset 1000, so ``-37`` travels as ``1037``
* scaled reals use offset ``10 * scale``, so ``-0.71`` at scale 100
  travels as ``1071``

Tags identify what the value means; the registry lives in ``TAG_SPECS``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ProtocolError, RangeError

# Robot selection.
TAG_ROBOT_UR5 = 5000
TAG_ROBOT_PANDA = 5001

# Control mode selection (modes 1..4).
TAG_MODE_BASE = 4000

# Joint sliders (modes 1 and 3), one tag per joint, 3001 is joint 0.
TAG_JOINT_BASE = 3000

# Gripper finger sliders, millimetres of opening per finger.
TAG_FINGER_LEFT = 3101
TAG_FINGER_RIGHT = 3102

# Pose entry (mode 2): position, quaternion, then confirm.
TAG_POSE_X = 2001
TAG_POSE_Y = 2002
TAG_POSE_Z = 2003
TAG_POSE_QX = 2004
TAG_POSE_QY = 2005
TAG_POSE_QZ = 2006
TAG_POSE_QW = 2007
TAG_CONFIRM = 2008

# Autonomous sequence control (mode 4).
TAG_START = 1001
TAG_STOP = 1002

# Bridge-to-operator telemetry.
TAG_STATUS = 9001
TAG_RTF = 9002
TAG_ERROR = 9003

# Round-trip latency probe, echoed verbatim by the bridge.
TAG_ECHO = 9999

# Valueless commands still carry a value field; it is fixed to 1.
COMMAND_VALUE = 1

ROBOT_TAGS = {TAG_ROBOT_UR5: "ur5", TAG_ROBOT_PANDA: "panda"}
MODE_TAGS = {TAG_MODE_BASE + m: m for m in (1, 2, 3, 4)}
JOINT_TAGS = {TAG_JOINT_BASE + 1 + j: j for j in range(7)}
FINGER_TAGS = {TAG_FINGER_LEFT: 0, TAG_FINGER_RIGHT: 1}
POSE_TAGS = {
    TAG_POSE_X: "x",
    TAG_POSE_Y: "y",
    TAG_POSE_Z: "z",
    TAG_POSE_QX: "qx",
    TAG_POSE_QY: "qy",
    TAG_POSE_QZ: "qz",
    TAG_POSE_QW: "qw",
}

#: (tag, group, payload description) for every registered tag, in doc order.
TAG_SPECS: tuple[tuple[int, str, str], ...] = (
    (TAG_ROBOT_UR5, "robot_select", "select the UR5 arm (value fixed to 1)"),
    (TAG_ROBOT_PANDA, "robot_select", "select the Panda arm (value fixed to 1)"),
    (4001, "mode_select", "activate mode 1, per-joint angle sliders"),
    (4002, "mode_select", "activate mode 2, Cartesian pose entry"),
    (4003, "mode_select", "activate mode 3, per-joint angle sliders with live preview"),
    (4004, "mode_select", "activate mode 4, autonomous pick-and-place"),
    (3001, "joint", "joint 1 angle, offset-encoded degrees"),
    (3002, "joint", "joint 2 angle, offset-encoded degrees"),
    (3003, "joint", "joint 3 angle, offset-encoded degrees"),
    (3004, "joint", "joint 4 angle, offset-encoded degrees"),
    (3005, "joint", "joint 5 angle, offset-encoded degrees"),
    (3006, "joint", "joint 6 angle, offset-encoded degrees"),
    (3007, "joint", "joint 7 angle, offset-encoded degrees (Panda only)"),
    (TAG_FINGER_LEFT, "gripper", "left finger opening, millimetres 0..40"),
    (TAG_FINGER_RIGHT, "gripper", "right finger opening, millimetres 0..40"),
    (TAG_POSE_X, "pose", "target x, offset-encoded scaled metres"),
    (TAG_POSE_Y, "pose", "target y, offset-encoded scaled metres"),
    (TAG_POSE_Z, "pose", "target z, offset-encoded scaled metres"),
    (TAG_POSE_QX, "pose", "target quaternion x, offset-encoded scaled"),
    (TAG_POSE_QY, "pose", "target quaternion y, offset-encoded scaled"),
    (TAG_POSE_QZ, "pose", "target quaternion z, offset-encoded scaled"),
    (TAG_POSE_QW, "pose", "target quaternion w, offset-encoded scaled"),
    (TAG_CONFIRM, "confirm", "apply the buffered pose (value fixed to 1)"),
    (TAG_START, "autonomy", "start the pick-and-place sequence (value fixed to 1)"),
    (TAG_STOP, "autonomy", "stop the sequence and home the arm (value fixed to 1)"),
    (TAG_STATUS, "telemetry", "sequence status flags bitmask (1 perceived, 2 planned, 4 grasped, 8 placed)"),
    (TAG_RTF, "telemetry", "real-time factor times 100"),
    (TAG_ERROR, "telemetry", "error code for a rejected frame"),
    (TAG_ECHO, "echo", "latency probe, echoed back unchanged"),
)

REGISTERED_TAGS = frozenset(spec[0] for spec in TAG_SPECS)
_TAG_GROUPS = {spec[0]: spec[1] for spec in TAG_SPECS}

ANGLE_OFFSET = 1000
VALUE_MAX = 0xFFFF


def tag_group(tag: int) -> str:
    """Return the registry group of ``tag`` or raise ProtocolError."""
    try:
        return _TAG_GROUPS[tag]
    except KeyError:
        raise ProtocolError(f"unregistered tag {tag}") from None


@dataclass(frozen=True)
class ScaleConfig:
    """Fixed-point configuration for mode-2 pose values.

    ``scale`` is counts per unit; ``negative_offset`` (always ``10 * scale``)
    is added to the quantized magnitude of negative values, which limits the
    representable magnitude to just under 10 units.
    """

    scale: int = 100

    def __post_init__(self):
        if self.scale not in (100, 1000):
            raise RangeError(f"unsupported scale {self.scale}")

    @property
    def negative_offset(self) -> int:
        return 10 * self.scale

    @property
    def resolution(self) -> float:
        return 1.0 / self.scale


def encode_angle(degrees: int) -> int:
    """Encode an integer angle in [-180, 180] degrees."""
    if isinstance(degrees, bool) or not isinstance(degrees, int):
        raise RangeError(f"angle must be an int, got {degrees!r}")
    if not -180 <= degrees <= 180:
        raise RangeError(f"angle {degrees} outside [-180, 180]")
    if degrees < 0:
        return -degrees + ANGLE_OFFSET
    return degrees


def decode_angle(value: int) -> int:
    """Invert encode_angle; values in (180, 1001) or above 1180 are invalid."""
    if 0 <= value <= 180:
        return value
    if ANGLE_OFFSET + 1 <= value <= ANGLE_OFFSET + 180:
        return -(value - ANGLE_OFFSET)
    raise ProtocolError(f"value {value} is not an encoded angle")


def encode_scaled(real: float, config: ScaleConfig) -> int:
    """Encode a real number as offset-folded fixed point."""
    real = float(real)
    if real != real or real in (float("inf"), float("-inf")):
        raise RangeError(f"cannot encode {real}")
    magnitude = round(abs(real) * config.scale)
    if magnitude >= config.negative_offset:
        raise RangeError(
            f"{real} exceeds the representable range at scale {config.scale}"
        )
    if real < 0:
        return magnitude + config.negative_offset
    return magnitude


def decode_scaled(value: int, config: ScaleConfig) -> float:
    """Invert encode_scaled, up to the quantization step."""
    offset = config.negative_offset
    if 0 <= value < offset:
        return value / config.scale
    if offset <= value < 2 * offset:
        return -(value - offset) / config.scale
    raise ProtocolError(
        f"value {value} is not a scaled real at scale {config.scale}"
    )


def encode_gripper(millimetres: int) -> int:
    """Finger openings ride as plain millimetres, 0..40."""
    if isinstance(millimetres, bool) or not isinstance(millimetres, int):
        raise RangeError(f"gripper opening must be an int, got {millimetres!r}")
    if not 0 <= millimetres <= 40:
        raise RangeError(f"gripper opening {millimetres} outside [0, 40]")
    return millimetres


def decode_gripper(value: int) -> int:
    if not 0 <= value <= 40:
        raise ProtocolError(f"value {value} is not a gripper opening")
    return value


@dataclass(frozen=True)
class WireFrame:
    """One tag/value pair. The tag must be registered, the value 16-bit."""

    tag: int
    value: int

    def __post_init__(self):
        tag_group(self.tag)
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise RangeError(f"frame value must be an int, got {self.value!r}")
        if not 0 <= self.value <= VALUE_MAX:
            raise RangeError(f"frame value {self.value} does not fit in 16 bits")


def frame_to_bytes(frame: WireFrame) -> bytes:
    return f"{frame.tag} {frame.value}\n".encode("ascii")


_LINE_RE = re.compile(rb"\A([0-9]{1,5}) ([0-9]{1,5})\r?\Z")


def _parse_line(line: bytes, offset: int) -> WireFrame:
    match = _LINE_RE.match(line)
    if match is None:
        raise ProtocolError(
            f"malformed line {line!r} at byte {offset}", byte_offset=offset
        )
    tag, value = int(match.group(1)), int(match.group(2))
    try:
        return WireFrame(tag, value)
    except (ProtocolError, RangeError) as exc:
        raise ProtocolError(f"{exc} at byte {offset}", byte_offset=offset) from None


def bytes_to_frames(data: bytes) -> tuple[list[WireFrame], bytes]:
    """Parse every complete line in ``data``.

    Returns the decoded frames and the trailing partial line (possibly
    empty).  Raises ProtocolError on the first malformed complete line.
    """
    frames: list[WireFrame] = []
    start = 0
    while True:
        newline = data.find(b"\n", start)
        if newline < 0:
            return frames, data[start:]
        frames.append(_parse_line(data[start:newline], start))
        start = newline + 1


@dataclass
class FrameParser:
    """Incremental parser for a framed byte stream.

    Bytes may arrive split at arbitrary boundaries; complete frames are
    returned as soon as their newline lands.  A malformed line raises
    ProtocolError carrying the absolute byte offset of the line and any
    frames decoded earlier in the same call (``exc.frames``); the bad line
    is consumed, so parsing resumes at the next line.
    """

    _buffer: bytes = b""
    _base_offset: int = 0

    def feed(self, data: bytes) -> list[WireFrame]:
        self._buffer += data
        frames: list[WireFrame] = []
        while True:
            newline = self._buffer.find(b"\n")
            if newline < 0:
                return frames
            line = self._buffer[:newline]
            line_offset = self._base_offset
            self._buffer = self._buffer[newline + 1 :]
            self._base_offset = line_offset + newline + 1
            try:
                frames.append(_parse_line(line, line_offset))
            except ProtocolError as exc:
                exc.frames = frames
                raise

    @property
    def pending_bytes(self) -> bytes:
        """The buffered partial line, exposed for tests."""
        return self._buffer
