"""
Planar workspace geometry for disk robots.

Holds the polygonal world, the robot models and every validity predicate the
planners and the validator share: clearance, configuration validity, straight
segment checks, robot-robot contact and the second-order car integrator.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import shapely
from shapely.geometry import Polygon
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

logger = logging.getLogger(__name__)

Point = Tuple[float, float]
# (x, y) for holonomic robots, (x, y, theta, v) for cars
Configuration = Tuple[float, ...]

# Points per chunk in vectorized clearance queries
_CLEARANCE_CHUNK = 2048
# Speed below which a braking car is considered stopped
STOP_EPS = 1e-9


@dataclass(frozen=True)
class CarDynamics:
    """Second-order car (bicycle kinematics) parameters."""
    wheelbase: float
    a_max: float
    steer_max: float

    def __post_init__(self):
        if self.wheelbase <= 0 or self.a_max <= 0:
            raise ValueError("wheelbase and a_max must be positive")
        if not 0 < self.steer_max < math.pi / 2:
            raise ValueError("steer_max must lie in (0, pi/2)")


@dataclass(frozen=True)
class Robot:
    """Disk robot; cars carry CarDynamics."""
    id: int
    radius: float
    v_max: float
    dynamics: Optional[CarDynamics] = None

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"Robot {self.id}: radius must be positive")
        if self.v_max <= 0:
            raise ValueError(f"Robot {self.id}: v_max must be positive")

    @property
    def is_kinodynamic(self) -> bool:
        return self.dynamics is not None

    @property
    def state_dim(self) -> int:
        return 4 if self.is_kinodynamic else 2

    def to_dict(self) -> Dict[str, Any]:
        dynamics = None
        if self.dynamics is not None:
            dynamics = {
                "wheelbase": self.dynamics.wheelbase,
                "a_max": self.dynamics.a_max,
                "steer_max": self.dynamics.steer_max,
            }
        return {"id": self.id, "radius": self.radius, "v_max": self.v_max, "dynamics": dynamics}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Robot":
        dynamics = data.get("dynamics")
        return cls(
            id=int(data["id"]),
            radius=float(data["radius"]),
            v_max=float(data["v_max"]),
            dynamics=CarDynamics(**dynamics) if dynamics else None,
        )


@dataclass(frozen=True)
class CompositeConfiguration:
    """Configurations of a robot group, ordered by robot id."""
    group: Tuple[int, ...]
    configs: Tuple[Configuration, ...]

    def __post_init__(self):
        if len(self.group) != len(self.configs):
            raise ValueError("group and configs must have equal length")
        if any(a >= b for a, b in zip(self.group, self.group[1:])):
            raise ValueError(f"group ids must be strictly increasing, got {self.group}")

    def config_of(self, robot_id: int) -> Configuration:
        return self.configs[self.group.index(robot_id)]

    def as_array(self) -> np.ndarray:
        """(m, d) array of the member configurations."""
        return np.array(self.configs, dtype=float)

    @classmethod
    def from_mapping(cls, configs: Dict[int, Configuration]) -> "CompositeConfiguration":
        group = tuple(sorted(configs))
        return cls(group=group, configs=tuple(tuple(float(v) for v in configs[r]) for r in group))


@dataclass(frozen=True)
class Workspace:
    """
    Axis-aligned bounds with polygonal obstacles.

    Obstacles are normalized to counter-clockwise order. Clearance queries use
    exact point-to-segment distances over all obstacle and bound segments.
    """
    bounds: Tuple[float, float, float, float]
    obstacles: Tuple[Tuple[Point, ...], ...] = ()

    _seg_a: np.ndarray = field(init=False, repr=False, compare=False)
    _seg_d: np.ndarray = field(init=False, repr=False, compare=False)
    _seg_len2: np.ndarray = field(init=False, repr=False, compare=False)
    _obstacle_union: Any = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xmin, ymin, xmax, ymax = (float(v) for v in self.bounds)
        if not (xmin < xmax and ymin < ymax):
            raise ValueError(f"Degenerate bounds {self.bounds}")
        object.__setattr__(self, "bounds", (xmin, ymin, xmax, ymax))

        normalized = []
        polygons = []
        for index, vertices in enumerate(self.obstacles):
            coords = [(float(x), float(y)) for x, y in vertices]
            if len(coords) < 3:
                raise ValueError(f"Obstacle {index} needs at least 3 vertices")
            poly = Polygon(coords)
            if not poly.is_valid or poly.area <= 0:
                raise ValueError(f"Obstacle {index} is not a simple polygon")
            for x, y in coords:
                if not (xmin - 1e-9 <= x <= xmax + 1e-9 and ymin - 1e-9 <= y <= ymax + 1e-9):
                    raise ValueError(f"Obstacle {index} vertex ({x}, {y}) lies outside bounds")
            poly = orient(poly, sign=1.0)
            polygons.append(poly)
            normalized.append(tuple((float(x), float(y)) for x, y in list(poly.exterior.coords)[:-1]))
        object.__setattr__(self, "obstacles", tuple(normalized))

        starts, ends = [], []
        for ring in normalized:
            for i, a in enumerate(ring):
                starts.append(a)
                ends.append(ring[(i + 1) % len(ring)])
        corners = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
        for i, a in enumerate(corners):
            starts.append(a)
            ends.append(corners[(i + 1) % 4])
        seg_a = np.array(starts, dtype=float)
        seg_d = np.array(ends, dtype=float) - seg_a
        len2 = (seg_d ** 2).sum(axis=1)
        keep = len2 > 0
        object.__setattr__(self, "_seg_a", seg_a[keep])
        object.__setattr__(self, "_seg_d", seg_d[keep])
        object.__setattr__(self, "_seg_len2", len2[keep])

        union = unary_union(polygons) if polygons else None
        if union is not None:
            shapely.prepare(union)
        object.__setattr__(self, "_obstacle_union", union)

    @property
    def extent(self) -> Tuple[float, float]:
        xmin, ymin, xmax, ymax = self.bounds
        return xmax - xmin, ymax - ymin

    def contains(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= x <= xmax and ymin <= y <= ymax

    def in_bounds_mask(self, points: np.ndarray) -> np.ndarray:
        xmin, ymin, xmax, ymax = self.bounds
        return (
            (points[:, 0] >= xmin) & (points[:, 0] <= xmax)
            & (points[:, 1] >= ymin) & (points[:, 1] <= ymax)
        )


def position(c: Sequence[float]) -> Point:
    return float(c[0]), float(c[1])


def clearances(ws: Workspace, points) -> np.ndarray:
    """
    Vectorized point_clearance.

    Args:
        ws: Workspace
        points: (N, 2) array-like of positions

    Returns:
        (N,) clearances; 0 for points inside obstacles or outside the bounds
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))[:, :2]
    out = np.empty(len(pts), dtype=float)
    for start in range(0, len(pts), _CLEARANCE_CHUNK):
        chunk = pts[start:start + _CLEARANCE_CHUNK]
        rel = chunk[:, None, :] - ws._seg_a[None, :, :]
        t = np.clip((rel * ws._seg_d[None, :, :]).sum(axis=2) / ws._seg_len2[None, :], 0.0, 1.0)
        diff = rel - t[:, :, None] * ws._seg_d[None, :, :]
        out[start:start + len(chunk)] = np.hypot(diff[:, :, 0], diff[:, :, 1]).min(axis=1)
    if ws._obstacle_union is not None and len(pts):
        inside = shapely.contains_xy(ws._obstacle_union, pts[:, 0], pts[:, 1])
        out[inside] = 0.0
    out[~ws.in_bounds_mask(pts)] = 0.0
    return out


def _point_segment_distances(points: np.ndarray, a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Broadcast distance from points to segments a + t*d, t in [0, 1]."""
    len2 = (d ** 2).sum(axis=-1)
    rel = points - a
    safe = np.where(len2 > 0, len2, 1.0)
    t = np.where(len2 > 0, np.clip((rel * d).sum(axis=-1) / safe, 0.0, 1.0), 0.0)
    diff = rel - t[..., None] * d
    return np.hypot(diff[..., 0], diff[..., 1])


def segment_clearances(ws: Workspace, starts, ends) -> np.ndarray:
    """
    Exact clearance of straight segments.

    Args:
        ws: Workspace
        starts: (N, 2) segment start points
        ends: (N, 2) segment end points

    Returns:
        (N,) minimum distance from each segment to any obstacle or bound segment;
        0 when the segment crosses an obstacle edge, or has an endpoint inside an
        obstacle or outside the bounds
    """
    p = np.atleast_2d(np.asarray(starts, dtype=float))[:, :2]
    q = np.atleast_2d(np.asarray(ends, dtype=float))[:, :2]
    out = np.empty(len(p), dtype=float)
    a = ws._seg_a[None, :, :]
    d = ws._seg_d[None, :, :]
    for start in range(0, len(p), _CLEARANCE_CHUNK):
        p0 = p[start:start + _CLEARANCE_CHUNK, None, :]
        p1 = q[start:start + _CLEARANCE_CHUNK, None, :]
        u = p1 - p0
        dist = np.minimum.reduce([
            _point_segment_distances(p0, a, d),
            _point_segment_distances(p1, a, d),
            _point_segment_distances(a, p0, u),
            _point_segment_distances(a + d, p0, u),
        ])
        # proper crossings; touching and collinear overlap already give 0 above
        o1 = u[..., 0] * (a[..., 1] - p0[..., 1]) - u[..., 1] * (a[..., 0] - p0[..., 0])
        o2 = u[..., 0] * (a[..., 1] + d[..., 1] - p0[..., 1]) - u[..., 1] * (a[..., 0] + d[..., 0] - p0[..., 0])
        o3 = d[..., 0] * (p0[..., 1] - a[..., 1]) - d[..., 1] * (p0[..., 0] - a[..., 0])
        o4 = d[..., 0] * (p1[..., 1] - a[..., 1]) - d[..., 1] * (p1[..., 0] - a[..., 0])
        dist[(o1 * o2 < 0) & (o3 * o4 < 0)] = 0.0
        out[start:start + len(dist)] = dist.min(axis=1)
    if len(p):
        endpoint_clear = np.minimum(clearances(ws, p), clearances(ws, q))
        out[endpoint_clear <= 0.0] = 0.0
    return out


def point_clearance(ws: Workspace, p: Sequence[float]) -> float:
    """Distance from p to the nearest obstacle or bound segment (0 inside obstacles)."""
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)) or not ws.contains(x, y):
        raise ValueError(f"Point ({x}, {y}) lies outside workspace bounds {ws.bounds}")
    return float(clearances(ws, [(x, y)])[0])


def config_valid(ws: Workspace, robot: Robot, c: Sequence[float]) -> bool:
    x, y = float(c[0]), float(c[1])
    if not (math.isfinite(x) and math.isfinite(y)) or not ws.contains(x, y):
        return False
    return point_clearance(ws, (x, y)) >= robot.radius


def local_path_valid(ws: Workspace, robot: Robot, c1: Sequence[float], c2: Sequence[float],
                     resolution: float) -> bool:
    """Check the straight segment c1→c2 at sample spacing <= resolution, endpoints included."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    p1 = np.asarray(position(c1))
    p2 = np.asarray(position(c2))
    n = max(1, math.ceil(float(np.hypot(*(p2 - p1))) / resolution))
    ts = np.linspace(0.0, 1.0, n + 1)[:, None]
    samples = p1[None, :] + ts * (p2 - p1)[None, :]
    if not ws.in_bounds_mask(samples).all():
        return False
    return bool((clearances(ws, samples) >= robot.radius).all())


def robots_collide(r1: Robot, c1: Sequence[float], r2: Robot, c2: Sequence[float]) -> bool:
    """Disk contact; touching (distance equal to the radius sum) is not a collision."""
    return math.hypot(c1[0] - c2[0], c1[1] - c2[1]) < r1.radius + r2.radius


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def integrate(robot: Robot, state: Sequence[float], control: Tuple[float, float], dt: float) -> Configuration:
    """
    One RK4 step of the second-order car.

    x' = v cos(theta), y' = v sin(theta), theta' = v tan(steer) / wheelbase, v' = accel,
    with v clamped to [-v_max, v_max] at every stage.

    Raises:
        ValueError: robot is not a car, dt <= 0, or the control exceeds its bounds
    """
    dyn = robot.dynamics
    if dyn is None:
        raise ValueError(f"Robot {robot.id} has no car dynamics")
    if dt <= 0:
        raise ValueError("dt must be positive")
    accel, steer = float(control[0]), float(control[1])
    if abs(accel) > dyn.a_max + 1e-12 or abs(steer) > dyn.steer_max + 1e-12:
        raise ValueError(f"Control ({accel}, {steer}) outside bounds for robot {robot.id}")

    v_max = robot.v_max
    turn = math.tan(steer) / dyn.wheelbase

    def clamp(v: float) -> float:
        return max(-v_max, min(v_max, v))

    def deriv(theta: float, v: float) -> Tuple[float, float, float, float]:
        v = clamp(v)
        return v * math.cos(theta), v * math.sin(theta), v * turn, accel

    x, y, theta, v = (float(s) for s in state[:4])
    k1 = deriv(theta, v)
    k2 = deriv(theta + 0.5 * dt * k1[2], v + 0.5 * dt * k1[3])
    k3 = deriv(theta + 0.5 * dt * k2[2], v + 0.5 * dt * k2[3])
    k4 = deriv(theta + dt * k3[2], v + dt * k3[3])

    def combine(i: int) -> float:
        return dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

    return (
        x + combine(0),
        y + combine(1),
        normalize_angle(theta + combine(2)),
        clamp(v + combine(3)),
    )


def brake_to_stop(robot: Robot, state: Sequence[float], dt: float,
                  max_steps: int = 1000) -> Tuple[List[Tuple[float, float]], List[Configuration]]:
    """
    Straight-line braking to v = 0.

    Returns:
        (controls, states) where states[i] follows controls[i]; both empty when already stopped
    """
    dyn = robot.dynamics
    if dyn is None:
        raise ValueError(f"Robot {robot.id} has no car dynamics")
    controls: List[Tuple[float, float]] = []
    states: List[Configuration] = []
    current = tuple(float(s) for s in state)
    while abs(current[3]) > STOP_EPS:
        if len(controls) >= max_steps:
            raise ValueError(f"Robot {robot.id} failed to stop within {max_steps} steps")
        accel = -math.copysign(min(dyn.a_max, abs(current[3]) / dt), current[3])
        current = integrate(robot, current, (accel, 0.0), dt)
        controls.append((accel, 0.0))
        states.append(current)
    return controls, states


# ============================================================
# JSON IO
# ============================================================

def workspace_to_dict(ws: Workspace) -> Dict[str, Any]:
    return {
        "bounds": list(ws.bounds),
        "obstacles": [[list(v) for v in poly] for poly in ws.obstacles],
    }


def workspace_from_dict(data: Dict[str, Any]) -> Workspace:
    try:
        bounds = tuple(float(v) for v in data["bounds"])
        obstacles = tuple(tuple((float(x), float(y)) for x, y in poly) for poly in data.get("obstacles", []))
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"Malformed workspace data: {e}") from e
    if len(bounds) != 4:
        raise ValueError("bounds must be [xmin, ymin, xmax, ymax]")
    return Workspace(bounds=bounds, obstacles=obstacles)


def save_workspace(ws: Workspace, path: Union[str, Path]):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(workspace_to_dict(ws), f, indent=2)
    logger.info(f"Saved workspace to {path}")


def load_workspace(path: Union[str, Path]) -> Workspace:
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    ws = workspace_from_dict(data)
    logger.info(f"Loaded workspace with {len(ws.obstacles)} obstacles from {path}")
    return ws
