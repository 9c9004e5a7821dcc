"""Exception types shared across the package."""


class RangeError(ValueError):
    """A real-world quantity falls outside the range its codec can carry."""


class ProtocolError(ValueError):
    """A byte stream or decoded frame violates the wire protocol.

    ``byte_offset`` is the absolute offset (within the stream fed so far)
    of the line that failed to parse, or ``None`` when the error was not
    produced by the incremental parser.
    """

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset
        # Frames decoded earlier in the same parser call, filled in by
        # FrameParser.feed so callers do not lose them on a bad line.
        self.frames = []


class ModelError(ValueError):
    """A kinematic model file or query is malformed or inconsistent."""


class ConfigError(ValueError):
    """A scenario file, replay script or CLI configuration is invalid."""


class PlanError(RuntimeError):
    """Pick-and-place planning failed.

    ``reason`` is one of ``"unreachable"``, ``"collision"`` or
    ``"spurious_target"``.
    """

    def __init__(self, reason: str, message: str = ""):
        super().__init__(message or reason)
        self.reason = reason
