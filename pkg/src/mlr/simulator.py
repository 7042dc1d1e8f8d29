"""Deterministic 2D differential-drive robot simulator.

The world is a set of wall segments. The robot is a disc that senses
eight infra-red ranges (one per 45 degrees), its own pose, and a camera
image rendered by casting one ray per pixel column over a 90 degree
field of view: the nearer the wall hit, the taller and brighter the
centered wall band drawn in that column. Everything is pure float
arithmetic with no randomness, so identical inputs give bit-identical
trajectories and frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidWorld, ParseError
from .memory import CommandTriple, Pose2D, V_MAX, W_MAX, normalize_angle

ROBOT_RADIUS = 0.2
IR_MAX_RANGE = 3.0
IR_RENDER_RANGE = 5.0
CAMERA_FOV = math.pi / 2.0

SKY_SHADE = 180
FLOOR_SHADE = 60

# teacher gains: steer on right-side clearance, slow down when blocked ahead
TEACHER_CLEARANCE = 0.6
TEACHER_SPEED = 0.6
TEACHER_SLOW_SPEED = 0.2
TEACHER_FRONT_SLOW = 1.0


@dataclass(frozen=True)
class WorldModel:
    walls: np.ndarray  # (m, 4) rows of x1, y1, x2, y2
    start: Pose2D
    bounds: tuple  # (xmin, ymin, xmax, ymax)


@dataclass(frozen=True)
class RobotState:
    pose: Pose2D
    fork: float = 0.0
    collided: bool = False


@dataclass(frozen=True)
class SensorFrame:
    image: np.ndarray  # (h, w, 3) uint8, R=G=B
    distances: tuple  # 8 IR ranges, meters
    pose: Pose2D


def _segment_distances(point: np.ndarray, walls: np.ndarray) -> np.ndarray:
    """Distance from a point to each wall segment."""
    a = walls[:, 0:2]
    b = walls[:, 2:4]
    ab = b - a
    ap = point - a
    denom = np.einsum("ij,ij->i", ab, ab)
    tt = np.divide(
        np.einsum("ij,ij->i", ap, ab), denom, out=np.zeros_like(denom), where=denom > 0
    )
    tt = np.clip(tt, 0.0, 1.0)
    closest = a + tt[:, None] * ab
    return np.linalg.norm(point - closest, axis=1)


def _raycast(origin: np.ndarray, angles: np.ndarray, walls: np.ndarray) -> np.ndarray:
    """Distance along each ray to the first wall hit; inf when nothing is hit."""
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (k, 2)
    a = walls[:, 0:2]  # (m, 2)
    seg = walls[:, 2:4] - a  # (m, 2)
    rel = a[None, :, :] - origin[None, None, :]  # (1, m, 2)
    # solve origin + t*dir = a + s*seg per (ray, wall) via 2D cross products
    denom = dirs[:, None, 0] * seg[None, :, 1] - dirs[:, None, 1] * seg[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rel[:, :, 0] * seg[None, :, 1] - rel[:, :, 1] * seg[None, :, 0]) / denom
        s = (rel[:, :, 0] * dirs[:, None, 1] - rel[:, :, 1] * dirs[:, None, 0]) / denom
    hit = (np.abs(denom) > 1e-12) & (t >= 0.0) & (s >= 0.0) & (s <= 1.0)
    t = np.where(hit, t, np.inf)
    return t.min(axis=1)


def step(world: WorldModel, state: RobotState, command: CommandTriple, dt: float) -> RobotState:
    """One Euler step; a move that would drive the disc into a wall freezes position."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    cmd = command.clamped()
    pose = state.pose
    new_yaw = normalize_angle(pose.yaw + cmd.angular * dt)
    nx = pose.x + cmd.linear * math.cos(pose.yaw) * dt
    ny = pose.y + cmd.linear * math.sin(pose.yaw) * dt
    clearance = _segment_distances(np.array([nx, ny]), world.walls).min()
    if clearance < ROBOT_RADIUS:
        return RobotState(Pose2D(pose.x, pose.y, new_yaw), cmd.fork, True)
    return RobotState(Pose2D(nx, ny, new_yaw), cmd.fork, False)


def sense(world: WorldModel, state: RobotState, width: int, height: int) -> SensorFrame:
    origin = np.array([state.pose.x, state.pose.y])
    yaw = state.pose.yaw

    ir_angles = yaw + np.arange(8) * (math.pi / 4.0)
    ir = np.minimum(_raycast(origin, ir_angles, world.walls), IR_MAX_RANGE)

    col_offsets = CAMERA_FOV / 2.0 - (np.arange(width) + 0.5) * (CAMERA_FOV / width)
    ranges = _raycast(origin, yaw + col_offsets, world.walls)

    finite = np.isfinite(ranges)
    safe = np.where(finite, ranges, 1.0)
    band = np.floor(height * np.minimum(1.0, 0.5 / safe) + 0.5).astype(np.int64)
    band = np.where(finite, band, 0)
    shade = np.floor(255.0 * np.clip(1.0 - safe / IR_RENDER_RANGE, 0.0, 1.0) * 0.8 + 25.0 + 0.5)
    shade = np.where(finite, shade, 0.0).astype(np.uint8)

    top = (height - band) // 2
    rows = np.arange(height)[:, None]
    gray = np.where(
        rows < top[None, :],
        np.uint8(SKY_SHADE),
        np.where(rows < (top + band)[None, :], shade[None, :], np.uint8(FLOOR_SHADE)),
    ).astype(np.uint8)
    image = np.repeat(gray[:, :, None], 3, axis=2)
    return SensorFrame(image=image, distances=tuple(float(d) for d in ir), pose=state.pose)


def teacher_policy(frame: SensorFrame) -> CommandTriple:
    """Scripted demonstrator: steer on the right and front-right clearances,
    slow down when the forward range drops below 1 m."""
    d = frame.distances
    linear = TEACHER_SLOW_SPEED if d[0] < TEACHER_FRONT_SLOW else TEACHER_SPEED
    angular = 1.2 * (d[6] - TEACHER_CLEARANCE) + 0.8 * (
        d[7] - TEACHER_CLEARANCE * math.sqrt(2.0)
    )
    angular = min(max(angular, -W_MAX), W_MAX)
    return CommandTriple(linear=linear, angular=angular, fork=0.0)


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def world_to_text(world: WorldModel) -> str:
    lines = [f"wall {_fmt(x1)} {_fmt(y1)} {_fmt(x2)} {_fmt(y2)}" for x1, y1, x2, y2 in world.walls]
    lines.append(f"start {_fmt(world.start.x)} {_fmt(world.start.y)} {_fmt(world.start.yaw)}")
    return "\n".join(lines) + "\n"


def parse_world(text: str) -> WorldModel:
    walls = []
    start = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            if fields[0] == "wall" and len(fields) == 5:
                walls.append([float(v) for v in fields[1:]])
            elif fields[0] == "start" and len(fields) == 4:
                start = Pose2D(float(fields[1]), float(fields[2]), float(fields[3]))
            else:
                raise ParseError(f"line {lineno}: unrecognized {line!r}")
        except ValueError:
            raise ParseError(f"line {lineno}: bad number in {line!r}") from None
    if start is None:
        raise ParseError("world has no start line")
    if len(walls) < 3:
        raise ParseError(f"world needs at least 3 walls, got {len(walls)}")
    walls = np.array(walls, dtype=np.float64)
    xs = np.concatenate([walls[:, 0], walls[:, 2]])
    ys = np.concatenate([walls[:, 1], walls[:, 3]])
    bounds = (float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))
    if not (bounds[0] <= start.x <= bounds[2] and bounds[1] <= start.y <= bounds[3]):
        raise InvalidWorld(f"start {start.x},{start.y} outside bounds {bounds}")
    if _segment_distances(np.array([start.x, start.y]), walls).min() < ROBOT_RADIUS:
        raise InvalidWorld("start pose is within one robot radius of a wall")
    return WorldModel(walls=walls, start=start, bounds=bounds)


def load_world(path) -> WorldModel:
    return parse_world(Path(path).read_text(encoding="ascii"))


def save_world(world: WorldModel, path) -> None:
    Path(path).write_text(world_to_text(world), encoding="ascii")


# 10 x 8 m room with two interior spurs; the start keeps the scripted
# teacher's orbit clear of every wall (tuned in scripts/tune_default_world.py)
DEFAULT_WORLD_TEXT = """\
# 10 x 8 m arena with two interior spur walls
wall 0 0 10 0
wall 10 0 10 8
wall 10 8 0 8
wall 0 8 0 0
wall 0 6.5 1.5 6.5
wall 8.5 1.5 10 1.5
start 5 3.6 0
"""


def default_world() -> WorldModel:
    return parse_world(DEFAULT_WORLD_TEXT)
