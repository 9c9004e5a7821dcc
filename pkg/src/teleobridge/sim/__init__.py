"""Headless world simulation: scene, perception, planning, grasping."""

from .scene import (  # noqa: F401
    Box,
    CameraConfig,
    NOT_DUE,
    PerceivedObject,
    Scenario,
    Scene,
    SceneObject,
    default_scenario,
    load_scenario,
    perceive,
    sample_spawn_position,
)
from .planner import Plan, PlanWaypoint, plan_pick_place, segment_intersects_box  # noqa: F401
from .grasp import GraspFlags, GraspPhase, GraspSequence  # noqa: F401
from .world import RobotUnit, RtfTracker, World  # noqa: F401
from .bench import (  # noqa: F401
    REFERENCE_SUCCESS_FRACTION,
    BenchmarkResult,
    TrialRow,
    run_grasp_benchmark,
)
