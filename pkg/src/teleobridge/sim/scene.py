"""Scene geometry, scenario files and the simulated depth camera.

The camera reports objects that rest on a support surface at or above a
height threshold and lie within its sensing radius, on a fixed cadence.
Robot link origins that satisfy the same geometric filter are reported
too, flagged spurious: the camera cannot tell an arm link from an object.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..control import EffortControllerConfig, PositionControllerConfig
from ..errors import ConfigError
from ..kinematics import Pose

#: Support surfaces below this height are outside the sensing volume.
MIN_SUPPORT_HEIGHT = 0.5
#: Sensing radius of the camera, metres.
DEFAULT_CAMERA_RANGE = 1.85
#: Seconds between perception batches.
DEFAULT_PERCEPTION_PERIOD = 5.0


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by centre and full size."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]

    def __post_init__(self):
        if len(self.center) != 3 or len(self.size) != 3:
            raise ConfigError("box center and size must have three components")
        if min(self.size) <= 0:
            raise ConfigError(f"box size must be positive, got {self.size}")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "size", tuple(float(v) for v in self.size))

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.center) - np.array(self.size) / 2.0

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.center) + np.array(self.size) / 2.0

    @property
    def top(self) -> float:
        return self.center[2] + self.size[2] / 2.0

    def contains(self, point, margin: float = 0.0) -> bool:
        point = np.asarray(point, dtype=float)
        return bool(
            np.all(point >= self.lo - margin) and np.all(point <= self.hi + margin)
        )

    def contains_xy(self, x: float, y: float) -> bool:
        lo, hi = self.lo, self.hi
        return lo[0] <= x <= hi[0] and lo[1] <= y <= hi[1]


@dataclass(frozen=True)
class CameraConfig:
    position: tuple[float, float, float]
    range: float = DEFAULT_CAMERA_RANGE

    def __post_init__(self):
        if self.range <= 0:
            raise ConfigError("camera range must be positive")
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))


@dataclass
class SceneObject:
    """A graspable object; boxes and upright cylinders behave alike here."""

    id: str
    shape: str
    dimensions: tuple[float, float, float]
    position: np.ndarray
    support_height: float
    attached_to: str | None = None

    def __post_init__(self):
        if self.shape not in ("box", "cylinder"):
            raise ConfigError(f"unknown object shape {self.shape!r}")
        if len(self.dimensions) != 3 or min(self.dimensions) <= 0:
            raise ConfigError("object dimensions must be three positive values")
        self.dimensions = tuple(float(v) for v in self.dimensions)
        self.position = np.array(self.position, dtype=float).reshape(3)

    @property
    def height(self) -> float:
        return self.dimensions[2]

    @property
    def grasp_width(self) -> float:
        return min(self.dimensions[0], self.dimensions[1])

    def rest_at(self, x: float, y: float, support_height: float):
        """Put the object at rest on a horizontal surface."""
        self.position = np.array([x, y, support_height + self.height / 2.0])
        self.support_height = float(support_height)


@dataclass
class Scene:
    table: Box
    collision_cube: Box
    camera: CameraConfig
    drop_zone: Box
    mounts: dict[str, Pose]
    objects: list[SceneObject] = field(default_factory=list)

    def __post_init__(self):
        if self.collision_cube.hi[2] > self.table.top + 1e-9:
            raise ConfigError("collision cube must stay under the table top")
        if not self.mounts:
            raise ConfigError("scene needs at least one robot mount")
        seen = set()
        for obj in self.objects:
            if obj.id in seen:
                raise ConfigError(f"duplicate object id {obj.id!r}")
            seen.add(obj.id)
            resting_z = obj.support_height + obj.height / 2.0
            if abs(obj.position[2] - resting_z) > 1e-6:
                raise ConfigError(
                    f"object {obj.id!r} does not rest on its support surface"
                )

    def object_by_id(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)


@dataclass(frozen=True)
class PerceivedObject:
    """One camera detection; spurious entries come from robot links."""

    id: str
    position: tuple[float, float, float]
    dimensions: tuple[float, float, float]
    spurious: bool
    timestamp: float

    @property
    def grasp_width(self) -> float:
        return min(self.dimensions[0], self.dimensions[1])


class NotDue:
    """Sentinel: the perception cadence has not elapsed yet."""

    def __repr__(self):
        return "NOT_DUE"


NOT_DUE = NotDue()


def perceive(
    scene: Scene,
    link_points: dict[str, list[np.ndarray]],
    now: float,
    last_time: float | None,
    period: float = DEFAULT_PERCEPTION_PERIOD,
) -> list[PerceivedObject] | NotDue:
    """Produce a detection batch, or NOT_DUE inside the cadence window.

    ``link_points`` maps robot names to their link origin positions in the
    world frame; origins inside the sensing volume become spurious
    detections.  Carried objects are not resting on a surface and are not
    reported.
    """
    if last_time is not None and now - last_time < period:
        return NOT_DUE
    camera_position = np.array(scene.camera.position)
    batch: list[PerceivedObject] = []
    for obj in scene.objects:
        if obj.attached_to is not None:
            continue
        if obj.support_height < MIN_SUPPORT_HEIGHT:
            continue
        if np.linalg.norm(obj.position - camera_position) > scene.camera.range:
            continue
        batch.append(
            PerceivedObject(
                id=obj.id,
                position=tuple(obj.position),
                dimensions=obj.dimensions,
                spurious=False,
                timestamp=now,
            )
        )
    for robot in sorted(link_points):
        for index, point in enumerate(link_points[robot]):
            point = np.asarray(point, dtype=float)
            if point[2] < MIN_SUPPORT_HEIGHT:
                continue
            if np.linalg.norm(point - camera_position) > scene.camera.range:
                continue
            batch.append(
                PerceivedObject(
                    id=f"spurious:{robot}:{index}",
                    position=tuple(point),
                    dimensions=(0.0, 0.0, 0.0),
                    spurious=True,
                    timestamp=now,
                )
            )
    return batch


@dataclass(frozen=True)
class Scenario:
    scene: Scene
    position_config: PositionControllerConfig
    effort_config: EffortControllerConfig
    theta_drop: float
    perception_period: float
    dt: float
    seed: int
    spawn: dict | None

    def __post_init__(self):
        if self.dt <= 0 or self.perception_period <= 0:
            raise ConfigError("dt and perception period must be positive")
        if self.theta_drop <= 0:
            raise ConfigError("theta_drop must be positive")


def _rpy_pose(position, rpy) -> Pose:
    roll, pitch, yaw = (float(v) for v in rpy)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    quaternion = (
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
        cr * cp * cy + sr * sp * sy,
    )
    return Pose(np.array(position, dtype=float), np.array(quaternion))


def load_scenario(source: str | Path | dict) -> Scenario:
    """Load a scenario from a JSON file, a dict, or a built-in name."""
    if isinstance(source, dict):
        data = source
    else:
        if isinstance(source, str) and not Path(source).exists():
            packaged = resources.files("teleobridge.data").joinpath(f"{source}.json")
            if packaged.is_file():
                data = json.loads(packaged.read_text())
                return _scenario_from_dict(data)
            raise ConfigError(f"no such scenario file or built-in: {source}")
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load scenario {source}: {exc}") from None
    return _scenario_from_dict(data)


def default_scenario() -> Scenario:
    return load_scenario("desk")


def _scenario_from_dict(data: dict) -> Scenario:
    try:
        table = Box(tuple(data["table"]["center"]), tuple(data["table"]["size"]))
        if "collision_cube" in data:
            cube = Box(
                tuple(data["collision_cube"]["center"]),
                tuple(data["collision_cube"]["size"]),
            )
        else:
            # Default: the table body, inset slightly below the top.
            cube = Box(
                (table.center[0], table.center[1], table.center[2] - 0.01),
                (table.size[0] - 0.02, table.size[1] - 0.02, table.size[2] - 0.02),
            )
        camera_data = data["camera"]
        camera = CameraConfig(
            tuple(camera_data["position"]),
            float(camera_data.get("range", DEFAULT_CAMERA_RANGE)),
        )
        zone = data["drop_zone"]
        zone_size = tuple(zone.get("size", (0.12, 0.12)))
        drop_zone = Box(
            (zone["center"][0], zone["center"][1], table.top),
            (zone_size[0], zone_size[1], 0.002),
        )
        mounts = {}
        for name, robot_data in data["robots"].items():
            mount = robot_data["mount"]
            mounts[name] = _rpy_pose(mount["position"], mount.get("rpy", (0, 0, 0)))
        objects = []
        for obj_data in data.get("objects", []):
            dimensions = tuple(obj_data["dimensions"])
            if "xy" in obj_data:
                x, y = obj_data["xy"]
                support = table.top
                position = (x, y, support + dimensions[2] / 2.0)
            else:
                position = tuple(obj_data["position"])
                support = float(obj_data["support_height"])
            objects.append(
                SceneObject(
                    id=obj_data["id"],
                    shape=obj_data.get("shape", "box"),
                    dimensions=dimensions,
                    position=np.array(position),
                    support_height=support,
                )
            )
        scene = Scene(table, cube, camera, drop_zone, mounts, objects)
        position_config = PositionControllerConfig(
            **data.get("position_controller", {})
        )
        effort_config = EffortControllerConfig(**data.get("effort_controller", {}))
        return Scenario(
            scene=scene,
            position_config=position_config,
            effort_config=effort_config,
            theta_drop=math.radians(float(data.get("theta_drop_deg", 60.0))),
            perception_period=float(
                data.get("perception_period", DEFAULT_PERCEPTION_PERIOD)
            ),
            dt=float(data.get("dt", 1e-3)),
            seed=int(data.get("seed", 0)),
            spawn=data.get("spawn"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad scenario data: {exc!r}") from None


def sample_spawn_position(scenario: Scenario, rng: np.random.Generator) -> tuple[float, float]:
    """Draw an on-table spawn point from the scenario's annulus, if any."""
    spawn = scenario.spawn
    if spawn is None:
        raise ConfigError("scenario has no spawn region")
    mount = scenario.scene.mounts[spawn["robot"]].position
    r_min, r_max = float(spawn["r_min"]), float(spawn["r_max"])
    bearing_lo = math.radians(float(spawn["bearing_min_deg"]))
    bearing_hi = math.radians(float(spawn["bearing_max_deg"]))
    table = scenario.scene.table
    margin = float(spawn.get("table_margin", 0.05))
    for _ in range(1000):
        radius = math.sqrt(rng.uniform(r_min**2, r_max**2))
        bearing = rng.uniform(bearing_lo, bearing_hi)
        x = mount[0] + radius * math.cos(bearing)
        y = mount[1] + radius * math.sin(bearing)
        lo, hi = table.lo, table.hi
        if lo[0] + margin <= x <= hi[0] - margin and lo[1] + margin <= y <= hi[1] - margin:
            return float(x), float(y)
    raise ConfigError("spawn annulus does not intersect the table")
