"""Operator-facing service: sessions, telemetry, metrics, latency."""

from .session import (  # noqa: F401
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
from .metrics import AccuracySample, ModeAccuracy, accuracy_report  # noqa: F401
from .service import Bridge, TelemetryEvent  # noqa: F401
from .latency import (  # noqa: F401
    ONE_WAY_BUDGET_MS,
    PROCESSING_BUDGET_MS,
    LatencyReport,
    run_latency_bench,
)
