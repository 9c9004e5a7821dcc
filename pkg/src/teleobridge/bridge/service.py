"""TCP bridge between operator connections and the simulated world.

One ticker thread owns the world and drains an ordered command queue at
tick boundaries.  Each accepted connection gets a reader thread that
parses frames and turns them into queued commands via its session; the
latency echo is answered directly from the reader so it never waits on
the tick loop.  A telemetry thread broadcasts status flags and the
real-time factor to every connection at a fixed period.

The listener serves two framings on the same port: plain newline frames,
and WebSocket for browsers (sniffed by the leading "GET " of the upgrade
request — wire tags are digits, so the two cannot be confused).
"""

from __future__ import annotations

import logging
import socket
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import ProtocolError
from ..sim import RtfTracker, World
from ..sim.scene import Scenario
from ..wire import (
    TAG_ECHO,
    TAG_ERROR,
    TAG_RTF,
    TAG_STATUS,
    VALUE_MAX,
    FrameParser,
    ScaleConfig,
    WireFrame,
    frame_to_bytes,
)
from . import wsadapter
from .session import (
    Echo,
    ErrorCode,
    ErrorReply,
    SetFingers,
    SetJoint,
    SetJointVector,
    Session,
    StartSequence,
    StopSequence,
)

log = logging.getLogger("teleobridge.bridge")

#: How long the transport sniff waits for a first byte before assuming a
#: plain line client that only wants to listen.
SNIFF_TIMEOUT = 0.25
#: Telemetry writes that stall longer than this mark the connection dead.
SEND_TIMEOUT = 0.5


@dataclass(frozen=True)
class TelemetryEvent:
    """One telemetry frame as sent, stamped with its global order."""

    tag: int
    value: int
    timestamp: float
    seq: int


class _Connection:
    """Socket plus session plus framing for one operator."""

    def __init__(self, connection_id: int, sock: socket.socket, session: Session):
        self.id = connection_id
        self.sock = sock
        self.session = session
        self.transport = "line"
        self.ws: wsadapter.WebSocketConnection | None = None
        self.alive = True
        self._send_lock = threading.Lock()

    def send_bytes(self, payload: bytes) -> None:
        if not self.alive:
            return
        try:
            with self._send_lock:
                if self.ws is not None:
                    self.ws.send_payload(payload)
                else:
                    self.sock.sendall(payload)
        except OSError:
            self.alive = False

    def recv_chunk(self) -> bytes:
        if self.ws is not None:
            payload = self.ws.recv_payload()
            return payload if payload is not None else b""
        return self.sock.recv(4096)

    def close(self) -> None:
        self.alive = False
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class Bridge:
    """The long-running service: world ticker, listener, telemetry."""

    def __init__(
        self,
        scenario: Scenario,
        host: str = "127.0.0.1",
        port: int = 0,
        scale: ScaleConfig = ScaleConfig(100),
        telemetry_period: float = 1.0,
        tick_load=None,
    ):
        self.world = World(scenario)
        self.models = {name: unit.model for name, unit in self.world.units.items()}
        self.host = host
        self.port = port
        self.scale = scale
        self.telemetry_period = telemetry_period
        self.tick_load = tick_load
        self.rtf = RtfTracker()
        #: seconds from frame receipt to effect applied (simple commands
        #: and echoes; Confirm is excluded because its cost is the IK solve)
        self.processing_samples: deque[float] = deque(maxlen=100_000)
        self.telemetry_events: deque[TelemetryEvent] = deque(maxlen=10_000)
        self.frames_handled = 0
        self._world_lock = threading.Lock()
        self._conns: dict[int, _Connection] = {}
        self._conns_lock = threading.Lock()
        self._next_id = 0
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._listener: socket.socket | None = None
        self._telemetry_seq = 0

    # -- lifecycle --

    def start(self) -> int:
        """Bind, spawn the worker threads, and return the bound port."""
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(16)
        self._listener = listener
        self.port = listener.getsockname()[1]
        for target in (self._run_ticker, self._run_telemetry, self._run_accept):
            thread = threading.Thread(target=target, daemon=True)
            thread.start()
            self._threads.append(thread)
        log.info("bridge listening on %s:%d", self.host, self.port)
        return self.port

    def stop(self) -> None:
        self._stop.set()
        if self._listener is not None:
            self._listener.close()
        with self._conns_lock:
            conns = list(self._conns.values())
        for conn in conns:
            conn.close()
        for thread in self._threads:
            thread.join(timeout=2.0)

    def __enter__(self) -> "Bridge":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()

    # -- state snapshots --

    def current_q(self, robot: str) -> np.ndarray:
        with self._world_lock:
            return self.world.unit(robot).state.q.copy()

    def processing_stats(self) -> tuple[float, float]:
        """(mean, max) applied-command latency in milliseconds."""
        samples = list(self.processing_samples)
        if not samples:
            return 0.0, 0.0
        return (
            1000.0 * sum(samples) / len(samples),
            1000.0 * max(samples),
        )

    # -- ticker --

    def _run_ticker(self) -> None:
        dt = self.world.dt
        deadline = time.perf_counter()
        while not self._stop.is_set():
            if self.tick_load is not None:
                self.tick_load()
            with self._world_lock:
                self.world.tick()
            now = time.perf_counter()
            self.rtf.record(now, self.world.sim_time)
            deadline += dt
            delay = deadline - now
            if delay > 0:
                time.sleep(delay)
            elif delay < -1.0:
                # too far behind to ever repay; restart the clock so the
                # measured factor reflects steady state, not a stale debt
                deadline = now

    # -- telemetry --

    def _telemetry_value_rtf(self) -> int | None:
        if not self.rtf.ready:
            return None
        return max(0, min(VALUE_MAX, round(self.rtf.ratio() * 100)))

    def _run_telemetry(self) -> None:
        deadline = time.perf_counter()
        while not self._stop.is_set():
            deadline += self.telemetry_period
            with self._world_lock:
                flags = {
                    name: unit.grasp.flags.bitmask()
                    for name, unit in self.world.units.items()
                }
            rtf_value = self._telemetry_value_rtf()
            with self._conns_lock:
                conns = list(self._conns.values())
            for conn in conns:
                frames = [WireFrame(TAG_STATUS, flags.get(conn.session.robot, 0))]
                if rtf_value is not None:
                    frames.append(WireFrame(TAG_RTF, rtf_value))
                payload = b"".join(frame_to_bytes(f) for f in frames)
                conn.send_bytes(payload)
                now = time.time()
                for frame in frames:
                    self._telemetry_seq += 1
                    self.telemetry_events.append(
                        TelemetryEvent(frame.tag, frame.value, now, self._telemetry_seq)
                    )
                    log.info("send conn=%d %d %d", conn.id, frame.tag, frame.value)
            delay = deadline - time.perf_counter()
            if delay > 0:
                self._stop.wait(delay)
            else:
                deadline = time.perf_counter()

    # -- listener / readers --

    def _run_accept(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _addr = self._listener.accept()
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            sock.setsockopt(
                socket.SOL_SOCKET,
                socket.SO_SNDTIMEO,
                struct.pack("ll", 0, int(SEND_TIMEOUT * 1_000_000)),
            )
            with self._conns_lock:
                connection_id = self._next_id
                self._next_id += 1
            session = Session(
                self.models,
                scale=self.scale,
                current_q=self.current_q,
                connection_id=connection_id,
            )
            conn = _Connection(connection_id, sock, session)
            thread = threading.Thread(
                target=self._serve_connection, args=(conn,), daemon=True
            )
            thread.start()

    def _sniff_transport(self, conn: _Connection) -> bool:
        """Upgrade to WebSocket when the peer opens with an HTTP request."""
        conn.sock.settimeout(SNIFF_TIMEOUT)
        try:
            head = conn.sock.recv(4, socket.MSG_PEEK)
        except socket.timeout:
            return True  # silent peer: plain line client that only listens
        except OSError:
            return False
        finally:
            conn.sock.settimeout(None)
        if head == b"":
            return False
        if head == b"GET ":
            try:
                wsadapter.server_handshake(conn.sock)
            except ProtocolError as exc:
                log.info("drop conn=%d bad handshake: %s", conn.id, exc)
                return False
            conn.transport = "ws"
            conn.ws = wsadapter.WebSocketConnection(conn.sock, is_client=False)
        return True

    def _serve_connection(self, conn: _Connection) -> None:
        if not self._sniff_transport(conn):
            conn.close()
            return
        with self._conns_lock:
            self._conns[conn.id] = conn
        log.info("open conn=%d transport=%s", conn.id, conn.transport)
        parser = FrameParser()
        try:
            while not self._stop.is_set() and conn.alive:
                try:
                    data = conn.recv_chunk()
                except (OSError, ProtocolError):
                    break
                if not data:
                    break
                received_at = time.perf_counter()
                # Re-feed empty input after an error so lines that arrived
                # in the same chunk as a malformed one still get handled.
                while True:
                    try:
                        frames = parser.feed(data)
                    except ProtocolError as exc:
                        self._process_frames(conn, exc.frames, received_at)
                        log.info(
                            "recv conn=%d malformed at byte %s",
                            conn.id,
                            exc.byte_offset,
                        )
                        self._reply_error(conn, ErrorCode.MALFORMED, str(exc))
                        data = b""
                        continue
                    self._process_frames(conn, frames, received_at)
                    break
        finally:
            with self._conns_lock:
                self._conns.pop(conn.id, None)
            conn.close()
            log.info("close conn=%d", conn.id)

    # -- frame handling --

    def _reply_error(self, conn: _Connection, code: ErrorCode, detail: str) -> None:
        conn.send_bytes(frame_to_bytes(WireFrame(TAG_ERROR, int(code))))
        log.info("send conn=%d %d %d (%s)", conn.id, TAG_ERROR, int(code), detail)

    def _process_frames(self, conn, frames, received_at: float) -> None:
        for frame in frames:
            self.frames_handled += 1
            log.info("recv conn=%d %d %d", conn.id, frame.tag, frame.value)
            if frame.tag == TAG_ECHO:
                conn.send_bytes(frame_to_bytes(frame))
                self.processing_samples.append(time.perf_counter() - received_at)
                continue
            effects = conn.session.handle_frame(frame, now=time.monotonic())
            for effect in effects:
                self._apply_effect(conn, effect, received_at)

    def _apply_effect(self, conn, effect, received_at: float) -> None:
        if isinstance(effect, ErrorReply):
            self._reply_error(conn, effect.code, effect.detail)
            return
        if isinstance(effect, Echo):
            conn.send_bytes(frame_to_bytes(effect.frame))
            return
        timed = not isinstance(effect, SetJointVector)

        def command(world, effect=effect):
            if isinstance(effect, SetJoint):
                world.set_joint_setpoint(effect.robot, effect.joint, effect.radians)
            elif isinstance(effect, SetFingers):
                world.set_finger_setpoint(effect.robot, effect.side, effect.metres)
            elif isinstance(effect, SetJointVector):
                world.set_joint_vector(effect.robot, effect.q)
            elif isinstance(effect, StartSequence):
                world.start_grasp(effect.robot)
            elif isinstance(effect, StopSequence):
                world.stop_grasp(effect.robot)
            if timed:
                self.processing_samples.append(time.perf_counter() - received_at)

        self.world.enqueue(command)
