"""Serial-arm kinematics: model files, FK, geometric Jacobian, DLS IK.

Models are plain text files listing DH rows in either the standard or the
modified (Craig) convention, joint limits, a fixed tool transform and a
home configuration.  Forward kinematics operates on raw joint vectors;
limit clamping is a separate explicit step so callers decide when to apply
it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ModelError

BUILTIN_MODELS = ("ur5", "panda")


def _as_readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


# --- quaternion helpers (x, y, z, w ordering, matching the pose tags) ---

def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    x, y, z, w = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(rotation: np.ndarray) -> np.ndarray:
    r = rotation
    trace = r[0, 0] + r[1, 1] + r[2, 2]
    if trace > 0:
        s = math.sqrt(trace + 1.0) * 2
        w = 0.25 * s
        x = (r[2, 1] - r[1, 2]) / s
        y = (r[0, 2] - r[2, 0]) / s
        z = (r[1, 0] - r[0, 1]) / s
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2
        w = (r[2, 1] - r[1, 2]) / s
        x = 0.25 * s
        y = (r[0, 1] + r[1, 0]) / s
        z = (r[0, 2] + r[2, 0]) / s
    elif r[1, 1] > r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2
        w = (r[0, 2] - r[2, 0]) / s
        x = (r[0, 1] + r[1, 0]) / s
        y = 0.25 * s
        z = (r[1, 2] + r[2, 1]) / s
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2
        w = (r[1, 0] - r[0, 1]) / s
        x = (r[0, 2] + r[2, 0]) / s
        y = (r[1, 2] + r[2, 1]) / s
        z = 0.25 * s
    q = np.array([x, y, z, w])
    return q / np.linalg.norm(q)


def quat_to_rotation_vector(q: np.ndarray) -> np.ndarray:
    """Axis times angle, angle folded into (-pi, pi]."""
    vec = np.asarray(q[:3], dtype=float)
    sin_half = np.linalg.norm(vec)
    if sin_half < 1e-12:
        return 2.0 * vec
    angle = 2.0 * math.atan2(sin_half, q[3])
    if angle > math.pi:
        angle -= 2.0 * math.pi
    return vec / sin_half * angle


def rotation_vector_between(current: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Rotation vector taking rotation matrix ``current`` to ``target``."""
    return quat_to_rotation_vector(quat_from_matrix(target @ current.T))


def quat_angle(qa: np.ndarray, qb: np.ndarray) -> float:
    """Angular distance between two unit quaternions, in [0, pi]."""
    dot = abs(float(np.dot(qa, qb)))
    return 2.0 * math.acos(min(1.0, dot))


@dataclass(frozen=True)
class Pose:
    """Position plus unit quaternion (x, y, z, w)."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        position = np.array(self.position, dtype=float).reshape(3)
        orientation = np.array(self.orientation, dtype=float).reshape(4)
        if not (np.all(np.isfinite(position)) and np.all(np.isfinite(orientation))):
            raise ModelError("pose components must be finite")
        norm = np.linalg.norm(orientation)
        if norm < 1e-9:
            raise ModelError("orientation quaternion has zero norm")
        object.__setattr__(self, "position", _as_readonly(position))
        object.__setattr__(self, "orientation", _as_readonly(orientation / norm))

    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    def transform(self) -> np.ndarray:
        t = np.eye(4)
        t[:3, :3] = self.rotation()
        t[:3, 3] = self.position
        return t

    @classmethod
    def from_transform(cls, transform: np.ndarray) -> "Pose":
        return cls(transform[:3, 3], quat_from_matrix(transform[:3, :3]))


@dataclass(frozen=True)
class DhRow:
    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0


@dataclass(frozen=True)
class KinematicModel:
    name: str
    convention: str
    rows: tuple[DhRow, ...]
    limits: tuple[tuple[float, float], ...]
    tool: np.ndarray
    home: tuple[float, ...]

    def __post_init__(self):
        if self.convention not in ("standard", "modified"):
            raise ModelError(f"unknown DH convention {self.convention!r}")
        if not 1 <= len(self.rows) <= 7:
            raise ModelError("models must have between 1 and 7 joints")
        if len(self.limits) != len(self.rows) or len(self.home) != len(self.rows):
            raise ModelError("rows, limits and home must have matching lengths")
        for lo, hi in self.limits:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ModelError(f"bad joint limit interval ({lo}, {hi})")
        for qi, (lo, hi) in zip(self.home, self.limits):
            if not lo <= qi <= hi:
                raise ModelError(f"home angle {qi} outside limits ({lo}, {hi})")
        object.__setattr__(self, "tool", _as_readonly(self.tool))

    @property
    def dof(self) -> int:
        return len(self.rows)


def _rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    return rz @ ry @ rx


def load_model(source: str | Path) -> KinematicModel:
    """Load a model file, or one of the built-ins by name ("ur5", "panda")."""
    if isinstance(source, str) and source in BUILTIN_MODELS:
        text = (
            resources.files("teleobridge.models")
            .joinpath(f"{source}.model")
            .read_text()
        )
    else:
        path = Path(source)
        if not path.is_file():
            raise ModelError(f"no such model file or built-in: {source}")
        text = path.read_text()

    name = None
    convention = None
    rows: list[DhRow] = []
    limits: list[tuple[float, float]] = []
    tool = np.eye(4)
    home: tuple[float, ...] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *fields = line.split()
        try:
            if keyword == "name":
                (name,) = fields
            elif keyword == "convention":
                (convention,) = fields
            elif keyword == "joint":
                a, alpha, d, theta_offset, lo, hi = map(float, fields)
                rows.append(DhRow(a, alpha, d, theta_offset))
                limits.append((lo, hi))
            elif keyword == "tool":
                x, y, z, roll, pitch, yaw = map(float, fields)
                tool = np.eye(4)
                tool[:3, :3] = _rpy_matrix(roll, pitch, yaw)
                tool[:3, 3] = (x, y, z)
            elif keyword == "home":
                home = tuple(map(float, fields))
            else:
                raise ValueError(f"unknown keyword {keyword!r}")
        except ValueError as exc:
            raise ModelError(f"line {lineno}: {exc}") from None

    if name is None or convention is None or home is None or not rows:
        raise ModelError("model file is missing name, convention, joints or home")
    return KinematicModel(name, convention, tuple(rows), tuple(limits), tool, home)


def _joint_transform(row: DhRow, theta: float, convention: str) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(row.alpha), math.sin(row.alpha)
    a, d = row.a, row.d
    if convention == "standard":
        return np.array(
            [
                [ct, -st * ca, st * sa, a * ct],
                [st, ct * ca, -ct * sa, a * st],
                [0.0, sa, ca, d],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
    return np.array(
        [
            [ct, -st, 0.0, a],
            [st * ca, ct * ca, -sa, -d * sa],
            [st * sa, ct * sa, ca, d * ca],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_q(model: KinematicModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.dof,):
        raise ModelError(f"expected {model.dof} joint values, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ModelError("joint values must be finite")
    return q


def link_frames(model: KinematicModel, q) -> list[np.ndarray]:
    """Cumulative transforms: base frame first, one entry per joint after.

    The tool transform is not included.
    """
    q = _check_q(model, q)
    frames = [np.eye(4)]
    for row, qi in zip(model.rows, q):
        frames.append(frames[-1] @ _joint_transform(row, row.theta_offset + qi, model.convention))
    return frames


def forward_kinematics(model: KinematicModel, q) -> Pose:
    """Tool pose in the base frame. ``q`` is used as given, without clamping."""
    return Pose.from_transform(link_frames(model, q)[-1] @ model.tool)


def clamp_to_limits(model: KinematicModel, q) -> np.ndarray:
    q = _check_q(model, q)
    lows = np.array([lo for lo, _ in model.limits])
    highs = np.array([hi for _, hi in model.limits])
    return np.clip(q, lows, highs)


def _jacobian_from_frames(
    model: KinematicModel, frames: list[np.ndarray], tcp: np.ndarray
) -> np.ndarray:
    jac = np.zeros((6, model.dof))
    for joint in range(model.dof):
        frame = frames[joint] if model.convention == "standard" else frames[joint + 1]
        axis = frame[:3, 2]
        origin = frame[:3, 3]
        jac[:3, joint] = np.cross(axis, tcp - origin)
        jac[3:, joint] = axis
    return jac


def jacobian(model: KinematicModel, q) -> np.ndarray:
    """Geometric Jacobian (linear rows stacked over angular) at ``q``.

    Under the standard convention joint i turns about the z axis of frame
    i-1; under the modified convention about the z axis of frame i.
    """
    frames = link_frames(model, q)
    tcp = (frames[-1] @ model.tool)[:3, 3]
    return _jacobian_from_frames(model, frames, tcp)


@dataclass(frozen=True)
class IkParams:
    damping: float = 0.05
    pos_tolerance: float = 1e-4
    rot_tolerance: float = 1e-3
    max_iterations: int = 150
    # Extra descents from a fixed seed pool when the caller's seed gets
    # stuck in a local minimum; 0 disables restarts entirely.
    restarts: int = 16
    # Per-iteration caps on the task-space error fed to the solver; they
    # keep early steps bounded when the target starts far away.
    step_pos_limit: float = 0.1
    step_rot_limit: float = 0.5

    def __post_init__(self):
        if self.damping <= 0 or self.max_iterations < 1:
            raise ModelError("damping must be positive and iterations >= 1")
        if min(self.pos_tolerance, self.rot_tolerance) <= 0:
            raise ModelError("tolerances must be positive")
        if self.restarts < 0:
            raise ModelError("restarts must be >= 0")


@dataclass(frozen=True)
class IkResult:
    q: np.ndarray
    iterations: int
    pos_residual: float
    rot_residual: float
    converged: bool

    @property
    def status(self) -> str:
        return "converged" if self.converged else "unreachable"


def _capped(vector: np.ndarray, cap: float) -> np.ndarray:
    norm = np.linalg.norm(vector)
    if norm > cap:
        return vector * (cap / norm)
    return vector


def _descend(
    model: KinematicModel,
    target_position: np.ndarray,
    target_rotation: np.ndarray,
    q: np.ndarray,
    lows: np.ndarray,
    highs: np.ndarray,
    params: IkParams,
    max_iterations: int,
) -> IkResult:
    """One damped-least-squares descent, clamped to limits at every step."""
    damping_sq = params.damping**2 * np.eye(6)
    pos_residual = math.inf
    rot_residual = math.inf
    for iteration in range(max_iterations):
        frames = link_frames(model, q)
        tcp = frames[-1] @ model.tool
        pos_error = target_position - tcp[:3, 3]
        rot_error = rotation_vector_between(tcp[:3, :3], target_rotation)
        pos_residual = float(np.linalg.norm(pos_error))
        rot_residual = float(np.linalg.norm(rot_error))
        if pos_residual <= params.pos_tolerance and rot_residual <= params.rot_tolerance:
            return IkResult(q, iteration, pos_residual, rot_residual, True)
        error = np.concatenate(
            [_capped(pos_error, params.step_pos_limit), _capped(rot_error, params.step_rot_limit)]
        )
        jac = _jacobian_from_frames(model, frames, tcp[:3, 3])
        step = jac.T @ np.linalg.solve(jac @ jac.T + damping_sq, error)
        q = np.clip(q + step, lows, highs)
    return IkResult(q, max_iterations, pos_residual, rot_residual, False)


def _wrist_flips(q: np.ndarray, lows: np.ndarray, highs: np.ndarray):
    """Escape candidates for 6-axis arms stuck with a flipped wrist."""
    for d4 in (math.pi, -math.pi, 0.0):
        for s5 in (-1.0, 1.0):
            for d6 in (0.0, math.pi, -math.pi):
                if d4 == 0.0 and s5 == 1.0:
                    continue
                candidate = q.copy()
                candidate[3] += d4
                candidate[4] *= s5
                candidate[5] += d6
                yield np.clip(candidate, lows, highs)


def inverse_kinematics(
    model: KinematicModel,
    target: Pose,
    seed,
    params: IkParams = IkParams(),
) -> IkResult:
    """Damped-least-squares IK with deterministic restarts.

    The first descent starts from ``seed``.  If it stalls in a local
    minimum and ``params.restarts`` allows, further descents run from
    wrist-flip escapes of the stuck configuration, the limit midpoint and
    a fixed pseudo-random pool, so repeated calls always return the same
    answer.  The best attempt is returned when nothing converges.
    """
    lows = np.array([lo for lo, _ in model.limits])
    highs = np.array([hi for _, hi in model.limits])
    q0 = np.clip(_check_q(model, seed), lows, highs)
    target_position = np.asarray(target.position, dtype=float)
    target_rotation = target.rotation()

    def run(q, iterations):
        return _descend(
            model, target_position, target_rotation, q, lows, highs, params, iterations
        )

    best = run(q0, params.max_iterations)
    if best.converged or params.restarts == 0:
        return best

    def better(a, b):
        return a if a.pos_residual + 0.3 * a.rot_residual < b.pos_residual + 0.3 * b.rot_residual else b

    escape_iterations = max(1, params.max_iterations // 2)
    if model.dof == 6:
        for candidate in _wrist_flips(best.q, lows, highs):
            result = run(candidate, escape_iterations)
            if result.converged:
                return result
            best = better(result, best)

    pool_rng = np.random.default_rng(0x5EED)
    pool = [(lows + highs) / 2.0] + [
        lows + pool_rng.random(model.dof) * (highs - lows)
        for _ in range(params.restarts)
    ]

    def start_cost(q):
        tcp = link_frames(model, q)[-1] @ model.tool
        return float(
            np.linalg.norm(target_position - tcp[:3, 3])
            + 0.3 * np.linalg.norm(rotation_vector_between(tcp[:3, :3], target_rotation))
        )

    pool.sort(key=start_cost)
    for candidate in pool:
        result = run(candidate, params.max_iterations)
        if result.converged:
            return result
        best = better(result, best)
        if model.dof == 6:
            for flipped in _wrist_flips(result.q, lows, highs):
                escaped = run(flipped, escape_iterations)
                if escaped.converged:
                    return escaped
                best = better(escaped, best)
    return best


def solution_complexity(seed, solution) -> float:
    """Total joint travel between two configurations, sum of |delta q|."""
    seed = np.asarray(seed, dtype=float)
    solution = np.asarray(solution, dtype=float)
    if seed.shape != solution.shape:
        raise ModelError("configurations must have the same length")
    return float(np.sum(np.abs(solution - seed)))
