"""Round-trip latency measurement against a live bridge.

The method mirrors the hardware measurement this simulation stands in
for: send an echo frame, time the round trip, and halve the mean to get
the one-way figure.  The processing budget is the time from frame
receipt to effect applied inside the bridge, which only an in-process
bridge can report; benchmarking a remote endpoint leaves those fields
empty.
"""

from __future__ import annotations

import socket
import time
from dataclasses import dataclass

from ..errors import ConfigError
from ..sim import load_scenario
from ..wire import TAG_ECHO, VALUE_MAX, FrameParser, WireFrame, frame_to_bytes
from .service import Bridge

#: One-way ceiling, milliseconds: the serial-link figure measured on the
#: hardware rig this bridge replaces.  Loopback must come in far under it.
ONE_WAY_BUDGET_MS = 16.4
#: Per-frame processing ceiling, milliseconds: the microcontroller budget
#: on the same rig.
PROCESSING_BUDGET_MS = 2.0

_WARMUP_FRAMES = 10


@dataclass(frozen=True)
class LatencyReport:
    samples_ms: tuple[float, ...]
    rtt_mean_ms: float
    one_way_ms: float
    processing_mean_ms: float | None
    processing_max_ms: float | None

    @property
    def within_budget(self) -> bool:
        if self.one_way_ms > ONE_WAY_BUDGET_MS:
            return False
        if self.processing_mean_ms is not None:
            return self.processing_mean_ms <= PROCESSING_BUDGET_MS
        return True


def _echo_round_trips(host: str, port: int, count: int) -> list[float]:
    """Serial echo round trips, milliseconds each, telemetry filtered out."""
    samples: list[float] = []
    with socket.create_connection((host, port), timeout=5.0) as sock:
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        parser = FrameParser()

        def round_trip(value: int) -> float:
            start = time.perf_counter()
            sock.sendall(frame_to_bytes(WireFrame(TAG_ECHO, value)))
            while True:
                data = sock.recv(4096)
                if not data:
                    raise ConfigError("bridge closed during latency bench")
                for frame in parser.feed(data):
                    if frame.tag == TAG_ECHO:
                        if frame.value != value:
                            raise ConfigError(
                                f"echo mismatch: sent {value}, got {frame.value}"
                            )
                        return (time.perf_counter() - start) * 1000.0

        for i in range(_WARMUP_FRAMES):
            round_trip((VALUE_MAX - i) % (VALUE_MAX + 1))
        for i in range(count):
            samples.append(round_trip(i % (VALUE_MAX + 1)))
    return samples


def run_latency_bench(
    endpoint: tuple[str, int] | None = None,
    count: int = 1000,
    scenario=None,
) -> LatencyReport:
    """Measure ``count`` echo round trips and derive the report fields.

    With no endpoint, a private bridge is started on a loopback port for
    the duration of the run so processing times can be read directly.
    """
    if count <= 0:
        raise ConfigError("latency bench needs at least one frame")
    if endpoint is not None:
        samples = _echo_round_trips(endpoint[0], endpoint[1], count)
        processing = (None, None)
    else:
        if scenario is None:
            scenario = load_scenario("desk")
        with Bridge(scenario, telemetry_period=3600.0) as bridge:
            samples = _echo_round_trips(bridge.host, bridge.port, count)
            processing = bridge.processing_stats()
    rtt_mean = sum(samples) / len(samples)
    return LatencyReport(
        samples_ms=tuple(samples),
        rtt_mean_ms=rtt_mean,
        one_way_ms=rtt_mean / 2.0,
        processing_mean_ms=processing[0],
        processing_max_ms=processing[1],
    )
