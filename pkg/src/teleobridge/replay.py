"""Scripted frame sessions against a deterministic in-process world.

A script is the wire's own framing with a leading relative-millisecond
column — ``"<ms> <tag> <value>"`` — so scripts double as protocol
documentation.  Frames are injected at their scheduled simulated times
(no sockets, no wall clock), and every motion command opens a
commanded/achieved pair on its channel.  A pair closes when the next
command lands on the same channel, or at the end of the run after a
settle tail, which is when the achieved value is read.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .bridge.metrics import AccuracySample, ModeAccuracy, accuracy_report
from .bridge.session import (
    Echo,
    ErrorReply,
    SetFingers,
    SetJoint,
    SetJointVector,
    Session,
    StartSequence,
    StopSequence,
)
from .errors import ConfigError, ProtocolError, RangeError
from .kinematics import forward_kinematics
from .sim import World
from .sim.scene import Scenario
from .wire import ScaleConfig, WireFrame

#: Simulated seconds appended after the last frame so pending commands
#: can settle before their pairs close.
SETTLE_TAIL = 5.0


@dataclass(frozen=True)
class ScriptEntry:
    at_ms: int
    frame: WireFrame


@dataclass(frozen=True)
class TranscriptLine:
    at_ms: int
    direction: str  # "recv" or "send"
    tag: int
    value: int


@dataclass(frozen=True)
class ReplayResult:
    entries: int
    transcript: tuple[TranscriptLine, ...]
    samples: tuple[AccuracySample, ...]

    def accuracy(self) -> dict[int, ModeAccuracy]:
        return accuracy_report(self.samples)


def parse_script(text: str) -> list[ScriptEntry]:
    """Parse script text; ConfigError carries the offending line number."""
    entries: list[ScriptEntry] = []
    last_ms = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError(f"line {number}: expected '<ms> <tag> <value>'")
        try:
            at_ms, tag, value = (int(p) for p in parts)
        except ValueError:
            raise ConfigError(f"line {number}: fields must be integers") from None
        if at_ms < 0:
            raise ConfigError(f"line {number}: negative timestamp")
        if at_ms < last_ms:
            raise ConfigError(f"line {number}: timestamps must not decrease")
        try:
            frame = WireFrame(tag, value)
        except (ProtocolError, RangeError) as exc:
            raise ConfigError(f"line {number}: {exc}") from None
        entries.append(ScriptEntry(at_ms, frame))
        last_ms = at_ms
    return entries


def load_script(path) -> list[ScriptEntry]:
    return parse_script(Path(path).read_text(encoding="ascii"))


class _PairLog:
    """Open commanded/achieved pairs, one per channel."""

    def __init__(self, world: World):
        self.world = world
        self.open: dict[tuple, tuple[int, float]] = {}
        self.samples: list[AccuracySample] = []

    def _achieved(self, channel: tuple) -> float:
        robot, kind, which = channel
        unit = self.world.unit(robot)
        if kind == "joint":
            return float(unit.state.q[which])
        if kind == "finger":
            return float(unit.state.finger_position[which])
        assert kind == "pose"
        tool = forward_kinematics(unit.model, unit.state.q)
        return float(tool.position["xyz".index(which)])

    def command(self, channel: tuple, mode: int, commanded: float) -> None:
        self.close(channel)
        self.open[channel] = (mode, commanded)

    def close(self, channel: tuple) -> None:
        pending = self.open.pop(channel, None)
        if pending is None:
            return
        mode, commanded = pending
        self.samples.append(
            AccuracySample(
                mode=mode,
                channel=f"{channel[0]}.{channel[1]}.{channel[2]}",
                commanded=commanded,
                achieved=self._achieved(channel),
            )
        )

    def close_all(self) -> None:
        for channel in list(self.open):
            self.close(channel)


def run_replay(
    scenario: Scenario,
    entries: list[ScriptEntry],
    scale: ScaleConfig = ScaleConfig(100),
    settle_tail: float = SETTLE_TAIL,
) -> ReplayResult:
    """Inject the script into a fresh world and collect accuracy pairs."""
    world = World(scenario)
    session = Session(
        {name: unit.model for name, unit in world.units.items()},
        scale=scale,
        current_q=lambda robot: world.unit(robot).state.q.copy(),
    )
    pairs = _PairLog(world)
    transcript: list[TranscriptLine] = []

    def now_ms() -> int:
        return round(world.sim_time * 1000.0)

    def advance_to(at_ms: int) -> None:
        remaining = at_ms - now_ms()
        if remaining > 0:
            world.run(remaining / 1000.0)

    def apply(effect) -> None:
        if isinstance(effect, ErrorReply):
            transcript.append(TranscriptLine(now_ms(), "send", 9003, int(effect.code)))
        elif isinstance(effect, Echo):
            transcript.append(
                TranscriptLine(now_ms(), "send", effect.frame.tag, effect.frame.value)
            )
        elif isinstance(effect, SetJoint):
            pairs.command((effect.robot, "joint", effect.joint), session.mode, effect.radians)
            world.set_joint_setpoint(effect.robot, effect.joint, effect.radians)
        elif isinstance(effect, SetFingers):
            pairs.command((effect.robot, "finger", effect.side), session.mode, effect.metres)
            world.set_finger_setpoint(effect.robot, effect.side, effect.metres)
        elif isinstance(effect, SetJointVector):
            for axis in "xyz":
                pairs.command(
                    (effect.robot, "pose", axis),
                    session.mode,
                    session.pose_buffer[axis],
                )
            world.set_joint_vector(effect.robot, effect.q)
        elif isinstance(effect, StartSequence):
            world.start_grasp(effect.robot)
        elif isinstance(effect, StopSequence):
            world.stop_grasp(effect.robot)

    for entry in entries:
        advance_to(entry.at_ms)
        transcript.append(
            TranscriptLine(entry.at_ms, "recv", entry.frame.tag, entry.frame.value)
        )
        for effect in session.handle_frame(entry.frame, now=world.sim_time):
            apply(effect)

    if settle_tail > 0:
        world.run(settle_tail)
    pairs.close_all()

    return ReplayResult(
        entries=len(entries),
        transcript=tuple(transcript),
        samples=tuple(pairs.samples),
    )
