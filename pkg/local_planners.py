"""
Sampling-based local planners for robot groups.

Holonomic groups grow composite RRTs with straight extensions; car groups grow
trees by forward-integrating sampled controls. Edge elements bias sampling with
dynamic regions that slide along the skeleton edge; vertex transitions and
start/goal attachments sample a ball around the area to cross.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from config import PlannerConfig
from skeleton import SkeletonEdge, WorkspaceSkeleton
from task_hypergraph import Hyperarc, TaskSpaceElement
from workspace import (
    CompositeConfiguration,
    Robot,
    Workspace,
    brake_to_stop,
    clearances,
    segment_clearances,
    integrate,
)

logger = logging.getLogger(__name__)

GOAL_SAMPLE_ATTEMPTS = 100
MIN_REGION_RADIUS = 1e-3
CONTACT_EPS = 1e-9
LANE_TANGENT_STEP = 0.05


class LocalPlanningFailure(RuntimeError):
    """A local planner gave up; the orchestrator turns this into a prohibition."""

    def __init__(self, message: str, iterations: int = 0):
        super().__init__(message)
        self.iterations = iterations


class ElementFailure(LocalPlanningFailure):
    pass


class TransitionFailure(LocalPlanningFailure):
    pass


class AttachmentFailure(LocalPlanningFailure):
    pass


class PlanningTimeout(RuntimeError):
    """The wall-clock deadline passed while planning."""


@dataclass
class PlanningContext:
    """Shared inputs of every planner call within one planning run."""
    ws: Workspace
    robots: Dict[int, Robot]
    cfg: PlannerConfig
    rng: np.random.Generator
    sk: Optional[WorkspaceSkeleton] = None
    deadline: Optional[float] = None
    iterations: int = 0

    def tick(self):
        self.iterations += 1
        if self.deadline is not None and self.iterations % 64 == 0 and time.monotonic() > self.deadline:
            raise PlanningTimeout("Wall-clock deadline exceeded")

    def group_robots(self, group: Sequence[int]) -> List[Robot]:
        return [self.robots[r] for r in group]

    def radii(self, group: Sequence[int]) -> np.ndarray:
        return np.array([self.robots[r].radius for r in group], dtype=float)

    def delta(self, group: Sequence[int]) -> float:
        return max(self.cfg.delta_for(self.robots[r].radius) for r in group)

    def is_kinodynamic(self, group: Sequence[int]) -> bool:
        kinds = {self.robots[r].is_kinodynamic for r in group}
        if len(kinds) > 1:
            raise ValueError(f"Group {tuple(group)} mixes holonomic robots and cars")
        return kinds.pop()


@dataclass
class LocalPath:
    """
    Composite motion sampled every `dt` seconds.

    states has shape (steps + 1, m, d); controls (cars only) has shape (steps, m, 2)
    and controls[k] takes states[k] to states[k + 1].
    """
    group: Tuple[int, ...]
    states: np.ndarray
    dt: float
    controls: Optional[np.ndarray] = None
    realized: str = ""
    iterations: int = 0

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    @property
    def duration(self) -> float:
        return self.steps * self.dt

    def final_configs(self) -> Dict[int, Tuple[float, ...]]:
        return {r: tuple(float(v) for v in self.states[-1, i]) for i, r in enumerate(self.group)}

    def start_configs(self) -> Dict[int, Tuple[float, ...]]:
        return {r: tuple(float(v) for v in self.states[0, i]) for i, r in enumerate(self.group)}


def hold_path(ctx: PlanningContext, group: Sequence[int], configs: np.ndarray, steps: int,
              realized: str = "") -> LocalPath:
    """Stationary path; cars re-integrate a zero control so the path replays exactly."""
    group = tuple(group)
    configs = np.asarray(configs, dtype=float)
    if not ctx.is_kinodynamic(group):
        return LocalPath(group, np.repeat(configs[None], steps + 1, axis=0), ctx.cfg.dt, None, realized)
    robots = ctx.group_robots(group)
    states = [configs]
    for _ in range(steps):
        states.append(np.array([integrate(rb, s, (0.0, 0.0), ctx.cfg.dt) for rb, s in zip(robots, states[-1])]))
    controls = np.zeros((steps, len(group), 2))
    return LocalPath(group, np.array(states), ctx.cfg.dt, controls, realized)


# ============================================================
# Regions and trees
# ============================================================

def entry_offset(edge: SkeletonEdge, delta: float) -> float:
    """
    Arc offset where a robot starts its edge element.

    Normally delta from the entry vertex. On edges shorter than 2·delta the entry
    and exit offsets meet at mid-edge, so the robot starts and ends its element
    closer than delta to the vertices; transitions around such edges get less room.
    """
    return min(delta, 0.5 * edge.length)


def exit_offset(edge: SkeletonEdge, delta: float) -> float:
    return edge.length - entry_offset(edge, delta)


def sample_balls(rng: np.random.Generator, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """One uniform sample inside each disk."""
    m = len(centers)
    r = radii * np.sqrt(rng.random(m))
    a = rng.random(m) * 2.0 * math.pi
    return centers + np.column_stack([r * np.cos(a), r * np.sin(a)])


@dataclass
class TargetRegion:
    """Fixed disks, one per robot."""
    centers: np.ndarray
    radii: np.ndarray


@dataclass
class DynamicRegion:
    """
    Per-robot sampling disks that advance along their skeleton edges.

    Robots that meet an opposing robot on the same edge get a lane: their disk
    is shifted to the right of their travel direction so the two can pass.
    """
    ws: Workspace
    edges: List[SkeletonEdge]
    directions: List[int]
    offsets: np.ndarray
    limits: np.ndarray
    radius_cfg: np.ndarray
    robot_radii: Optional[np.ndarray] = None
    lanes: Optional[np.ndarray] = None
    radii: np.ndarray = field(init=False)
    centers: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.robot_radii is None:
            self.robot_radii = np.zeros(len(self.edges))
        if self.lanes is None:
            self.lanes = np.zeros(len(self.edges), dtype=bool)
        self._refresh()

    @classmethod
    def for_element(cls, ctx: PlanningContext, element: TaskSpaceElement) -> "DynamicRegion":
        edges, directions, offsets, limits, radius_cfg = [], [], [], [], []
        for robot in element.group:
            a = element.assignment_of(robot)
            e = ctx.sk.edges[a.edge]
            delta = ctx.cfg.delta_for(ctx.robots[robot].radius)
            edges.append(e)
            directions.append(a.direction)
            offsets.append(entry_offset(e, delta))
            limits.append(exit_offset(e, delta))
            radius_cfg.append(ctx.cfg.region_radius_for(ctx.robots[robot].radius))
        lanes = [
            any(other.id == e.id and od != d for other, od in zip(edges, directions))
            for e, d in zip(edges, directions)
        ]
        return cls(ctx.ws, edges, directions, np.array(offsets), np.array(limits), np.array(radius_cfg),
                   ctx.radii(element.group), np.array(lanes, dtype=bool))

    def _refresh(self):
        centers = np.array([e.point_at(s, d) for e, s, d in zip(self.edges, self.offsets, self.directions)])
        if self.lanes.any():
            local = clearances(self.ws, centers)
            for i in np.flatnonzero(self.lanes):
                shift = min(0.5 * local[i], max(0.0, local[i] - self.robot_radii[i]))
                centers[i] = centers[i] + shift * self._right_normal(i)
        self.centers = centers
        local = clearances(self.ws, self.centers)
        self.radii = np.maximum(np.minimum(self.radius_cfg, local), MIN_REGION_RADIUS)

    def _right_normal(self, i: int) -> np.ndarray:
        e, s, d = self.edges[i], self.offsets[i], self.directions[i]
        h = min(LANE_TANGENT_STEP, 0.5 * e.length)
        tangent = e.point_at(s + h, d) - e.point_at(s - h, d)
        norm = float(np.hypot(*tangent))
        if norm == 0.0:
            return np.zeros(2)
        return np.array([tangent[1], -tangent[0]]) / norm

    @property
    def at_end(self) -> bool:
        return bool((self.offsets >= self.limits - 1e-9).all())

    def within(self, positions: np.ndarray, tolerance: np.ndarray) -> bool:
        return bool((np.hypot(*(positions - self.centers).T) <= tolerance).all())

    def advance(self, step: np.ndarray):
        self.offsets = np.minimum(self.offsets + step, self.limits)
        self._refresh()

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return sample_balls(rng, self.centers, self.radii)


class MotionTree:
    """Composite tree; car nodes keep the integrated segment from their parent."""

    def __init__(self, root: np.ndarray):
        root = np.asarray(root, dtype=float)
        self.m = root.shape[0]
        self._positions = np.empty((256, self.m * 2))
        self._positions[0] = root[:, :2].ravel()
        self.states: List[np.ndarray] = [root]
        self.parents: List[int] = [-1]
        self.segments: List[Optional[Tuple[np.ndarray, np.ndarray]]] = [None]

    def __len__(self) -> int:
        return len(self.states)

    def add(self, states: np.ndarray, parent: int,
            segment: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> int:
        n = len(self.states)
        if n == len(self._positions):
            self._positions = np.vstack([self._positions, np.empty_like(self._positions)])
        self._positions[n] = states[:, :2].ravel()
        self.states.append(states)
        self.parents.append(parent)
        self.segments.append(segment)
        return n

    def nearest(self, target: np.ndarray) -> int:
        diff = self._positions[:len(self.states)] - np.asarray(target, dtype=float).ravel()
        return int(np.argmin((diff ** 2).sum(axis=1)))

    def branch(self, node: int) -> List[int]:
        nodes = []
        while node != -1:
            nodes.append(node)
            node = self.parents[node]
        return nodes[::-1]


# ============================================================
# Validity
# ============================================================

def _configs_valid(ctx: PlanningContext, radii: np.ndarray, positions: np.ndarray) -> bool:
    """Clearance and separation of one composite configuration."""
    if not ctx.ws.in_bounds_mask(positions).all():
        return False
    if (clearances(ctx.ws, positions) < radii + CONTACT_EPS).any():
        return False
    if len(positions) > 1:
        d = np.hypot(*(positions[:, None, :] - positions[None, :, :]).transpose(2, 0, 1))
        need = radii[:, None] + radii[None, :] + CONTACT_EPS
        iu = np.triu_indices(len(positions), 1)
        if (d[iu] < need[iu]).any():
            return False
    return True


def _closest_approach(p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """(m, m) minimum distance between robots moving linearly p0→p1 over the same interval."""
    r0 = p0[:, None, :] - p0[None, :, :]
    w = (p1[:, None, :] - p1[None, :, :]) - r0
    w2 = (w ** 2).sum(axis=2)
    safe = np.where(w2 > 0, w2, 1.0)
    t = np.where(w2 > 0, np.clip(-(r0 * w).sum(axis=2) / safe, 0.0, 1.0), 0.0)
    closest = r0 + t[:, :, None] * w
    return np.hypot(closest[..., 0], closest[..., 1])


def _motion_valid(ctx: PlanningContext, radii: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> bool:
    """Straight composite motion p0→p1, checked continuously against obstacles and between robots."""
    if not ctx.ws.in_bounds_mask(p1).all():
        return False
    if (segment_clearances(ctx.ws, p0, p1) < radii + CONTACT_EPS).any():
        return False
    m = len(radii)
    if m > 1:
        need = radii[:, None] + radii[None, :] + CONTACT_EPS
        iu = np.triu_indices(m, 1)
        if (_closest_approach(p0, p1)[iu] < need[iu]).any():
            return False
    return True


def _states_valid(ctx: PlanningContext, radii: np.ndarray, states: np.ndarray) -> bool:
    """Exact validity of integrated car states (k, m, d) at every sample."""
    pts = states[..., :2]
    flat = pts.reshape(-1, 2)
    if not ctx.ws.in_bounds_mask(flat).all():
        return False
    k, m = pts.shape[:2]
    if (clearances(ctx.ws, flat).reshape(k, m) < radii[None]).any():
        return False
    if m > 1:
        diff = pts[:, :, None, :] - pts[:, None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
        need = radii[:, None] + radii[None, :]
        iu = np.triu_indices(m, 1)
        if (d[:, iu[0], iu[1]] < need[iu]).any():
            return False
    return True


# ============================================================
# Holonomic trees
# ============================================================

def _steer(p0: np.ndarray, target: np.ndarray, step_sizes: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Move every robot toward its target by at most its step size; True when the target is reached."""
    delta = target - p0
    lengths = np.hypot(*delta.T)
    moving = lengths > 0
    if not moving.any():
        return target.copy(), True
    scale = min(1.0, float((step_sizes[moving] / lengths[moving]).min()))
    if scale >= 1.0:
        return target.copy(), True
    return p0 + scale * delta, False


def _timed_path(ctx: PlanningContext, group: Tuple[int, ...], waypoints: np.ndarray, realized: str,
                iterations: int) -> LocalPath:
    """
    Constant-speed parameterization at each robot's v_max, resampled every dt.

    Segment durations follow the slowest robot and the total is stretched to a whole
    number of steps, so no robot exceeds v_max.
    """
    dt = ctx.cfg.dt
    v_max = np.array([ctx.robots[r].v_max for r in group])
    if len(waypoints) == 1:
        return LocalPath(group, waypoints.copy(), dt, None, realized, iterations)
    seg = np.hypot(waypoints[1:, :, 0] - waypoints[:-1, :, 0], waypoints[1:, :, 1] - waypoints[:-1, :, 1])
    durations = (seg / v_max[None]).max(axis=1)
    knots = np.concatenate([[0.0], np.cumsum(durations)])
    total = float(knots[-1])
    if total <= 0:
        return LocalPath(group, waypoints[:1].copy(), dt, None, realized, iterations)
    steps = max(1, math.ceil(total / dt - 1e-9))
    knots = knots * (steps * dt / total)
    times = np.arange(steps + 1) * dt
    times[-1] = knots[-1]
    states = np.empty((steps + 1, len(group), 2))
    for i in range(len(group)):
        states[:, i, 0] = np.interp(times, knots, waypoints[:, i, 0])
        states[:, i, 1] = np.interp(times, knots, waypoints[:, i, 1])
    return LocalPath(group, states, dt, None, realized, iterations)


def _holonomic_rrt(ctx: PlanningContext, group: Tuple[int, ...], start: np.ndarray,
                   sample: Callable[[], np.ndarray], sample_goal: Callable[[], Optional[np.ndarray]],
                   failure: Type[LocalPlanningFailure], realized: str,
                   n_fail: Optional[int], max_iterations: int) -> LocalPath:
    """
    Goal-biased composite RRT with greedy connection toward goal samples.

    The goal is tried first; it is resampled after every goal_retry failures.
    """
    cfg = ctx.cfg
    radii = ctx.radii(group)
    step_sizes = np.array([cfg.step_size_for(r) for r in radii])
    tree = MotionTree(start)
    goal = sample_goal()
    consecutive = 0
    since_goal = 0

    for iteration in range(max_iterations):
        ctx.tick()
        extended = False
        if goal is not None and (iteration == 0 or ctx.rng.random() < cfg.goal_bias):
            node = tree.nearest(goal)
            while True:
                p0 = tree.states[node]
                p1, reached = _steer(p0, goal, step_sizes)
                if not _motion_valid(ctx, radii, p0, p1):
                    break
                node = tree.add(p1, node)
                extended = True
                if reached:
                    waypoints = np.array([tree.states[n] for n in tree.branch(node)])
                    logger.debug(f"{realized}: reached goal after {iteration + 1} iterations, {len(tree)} nodes")
                    return _timed_path(ctx, group, waypoints, realized, iteration + 1)
        else:
            target = sample()
            node = tree.nearest(target)
            p0 = tree.states[node]
            p1, _ = _steer(p0, target, step_sizes)
            if _motion_valid(ctx, radii, p0, p1):
                tree.add(p1, node)
                extended = True

        if extended:
            consecutive = 0
            continue
        consecutive += 1
        since_goal += 1
        if n_fail is not None and consecutive >= n_fail:
            raise failure(f"{realized}: {consecutive} consecutive failed extensions", iteration + 1)
        if goal is None or since_goal >= cfg.goal_retry:
            goal = sample_goal()
            since_goal = 0
    raise failure(f"{realized}: no solution within {max_iterations} iterations", max_iterations)


def _goal_sampler(ctx: PlanningContext, radii: np.ndarray, centers: np.ndarray, goal_radii: np.ndarray,
                  exact_first: bool) -> Callable[[], Optional[np.ndarray]]:
    tried_exact = [not exact_first]

    def sample_goal() -> Optional[np.ndarray]:
        if not tried_exact[0]:
            tried_exact[0] = True
            if _configs_valid(ctx, radii, centers):
                return centers.copy()
        for _ in range(GOAL_SAMPLE_ATTEMPTS):
            candidate = sample_balls(ctx.rng, centers, goal_radii)
            if _configs_valid(ctx, radii, candidate):
                return candidate
        return None

    return sample_goal


# ============================================================
# Kinodynamic trees
# ============================================================

def kino_extend(ctx: PlanningContext, group: Sequence[int], tree: MotionTree, region) -> Optional[int]:
    """
    Extend a car tree toward `region.centers` by sampled controls.

    The node nearest the centers is expanded with k_controls random controls (plus a
    coasting control), each held for a random whole number of dt steps within
    [dt_min, dt_max]. Candidates are tried in order of summed final distance to the
    centers; the first one valid at every dt sample is added.

    Returns:
        New node id, or None when every candidate is invalid
    """
    cfg = ctx.cfg
    robots = ctx.group_robots(group)
    if not all(rb.is_kinodynamic for rb in robots):
        raise ValueError("kino_extend needs car dynamics for every group member")
    radii = ctx.radii(group)
    centers = np.asarray(region.centers, dtype=float)
    near = tree.nearest(centers)
    root = tree.states[near]
    k_lo = max(1, math.ceil(cfg.dt_min / cfg.dt - 1e-9))
    k_hi = max(k_lo, math.floor(cfg.dt_max / cfg.dt + 1e-9))

    candidates = [(np.zeros((len(robots), 2)), k_lo)]
    for _ in range(cfg.k_controls):
        accel = ctx.rng.uniform(-1.0, 1.0, len(robots)) * np.array([rb.dynamics.a_max for rb in robots])
        steer = ctx.rng.uniform(-1.0, 1.0, len(robots)) * np.array([rb.dynamics.steer_max for rb in robots])
        candidates.append((np.column_stack([accel, steer]), int(ctx.rng.integers(k_lo, k_hi + 1))))

    rollouts = []
    for controls, k in candidates:
        seq = np.empty((k, len(robots), root.shape[1]))
        current = [tuple(s) for s in root]
        for step in range(k):
            current = [integrate(rb, s, (u[0], u[1]), cfg.dt) for rb, s, u in zip(robots, current, controls)]
            seq[step] = current
        score = float(np.hypot(*(seq[-1, :, :2] - centers).T).sum())
        rollouts.append((score, seq, np.repeat(controls[None], k, axis=0)))

    for index in np.argsort([r[0] for r in rollouts], kind="stable"):
        _, seq, controls = rollouts[index]
        if _states_valid(ctx, radii, seq):
            return tree.add(seq[-1].copy(), near, (seq, controls))
    return None


def _brake(ctx: PlanningContext, group: Sequence[int], states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Brake every member to v = 0; members that stop early coast with zero control."""
    robots = ctx.group_robots(group)
    per_robot = [brake_to_stop(rb, s, ctx.cfg.dt) for rb, s in zip(robots, states)]
    steps = max(len(c) for c, _ in per_robot)
    seq = np.empty((steps, len(robots), states.shape[1]))
    controls = np.zeros((steps, len(robots), 2))
    for i, (rb, (ctrl, sts)) in enumerate(zip(robots, per_robot)):
        current = tuple(states[i])
        for step in range(steps):
            if step < len(ctrl):
                controls[step, i] = ctrl[step]
                current = sts[step]
            else:
                current = integrate(rb, current, (0.0, 0.0), ctx.cfg.dt)
            seq[step, i] = current
    return seq, controls


def _kino_path(ctx: PlanningContext, group: Tuple[int, ...], tree: MotionTree, node: int,
               tail: Tuple[np.ndarray, np.ndarray], realized: str, iterations: int) -> LocalPath:
    nodes = tree.branch(node)
    states = [tree.states[nodes[0]][None]]
    controls = []
    for n in nodes[1:]:
        seq, ctrl = tree.segments[n]
        states.append(seq)
        controls.append(ctrl)
    if len(tail[0]):
        states.append(tail[0])
        controls.append(tail[1])
    all_controls = np.concatenate(controls) if controls else np.zeros((0, len(group), 2))
    return LocalPath(group, np.concatenate(states), ctx.cfg.dt, all_controls, realized, iterations)


def _try_finish(ctx: PlanningContext, group: Tuple[int, ...], radii: np.ndarray, states: np.ndarray,
                centers: np.ndarray, tolerance: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Braking manoeuvre that ends inside the goal disks, or None."""
    if (np.hypot(*(states[:, :2] - centers).T) > tolerance).any():
        return None
    seq, controls = _brake(ctx, group, states)
    if len(seq) == 0:
        return seq, controls
    if not _states_valid(ctx, radii, seq):
        return None
    if (np.hypot(*(seq[-1, :, :2] - centers).T) > tolerance).any():
        return None
    return seq, controls


def _kino_goal_tree(ctx: PlanningContext, group: Tuple[int, ...], start: np.ndarray,
                    sample: Callable[[], np.ndarray], goal_centers: np.ndarray, goal_radii: np.ndarray,
                    failure: Type[LocalPlanningFailure], realized: str) -> LocalPath:
    cfg = ctx.cfg
    radii = ctx.radii(group)
    tree = MotionTree(start)
    finish = _try_finish(ctx, group, radii, start, goal_centers, goal_radii)
    if finish is not None:
        return _kino_path(ctx, group, tree, 0, finish, realized, 0)
    consecutive = 0
    for iteration in range(cfg.max_iterations):
        ctx.tick()
        if ctx.rng.random() < cfg.goal_bias:
            target = goal_centers
        else:
            target = sample()
        node = kino_extend(ctx, group, tree, TargetRegion(target, goal_radii))
        if node is None:
            consecutive += 1
            if consecutive >= cfg.n_fail:
                raise failure(f"{realized}: {consecutive} consecutive failed extensions", iteration + 1)
            continue
        consecutive = 0
        finish = _try_finish(ctx, group, radii, tree.states[node], goal_centers, goal_radii)
        if finish is not None:
            return _kino_path(ctx, group, tree, node, finish, realized, iteration + 1)
        if len(tree) >= cfg.max_tree_nodes:
            raise failure(f"{realized}: tree reached {len(tree)} states", iteration + 1)
    raise failure(f"{realized}: no solution within {cfg.max_iterations} iterations", cfg.max_iterations)


# ============================================================
# Planners
# ============================================================

def region_rrt_edge(ctx: PlanningContext, element: TaskSpaceElement, starts: CompositeConfiguration) -> LocalPath:
    """
    Plan a group along its shared skeleton edge with dynamic sampling regions.

    Args:
        ctx: Planning context (workspace, skeleton, robots, config, rng)
        element: Traverse element; every member has an assignment on the same edge
        starts: Member configurations near the edge entry

    Returns:
        LocalPath ending with every robot near the edge exit (cars stopped)

    Raises:
        ElementFailure: n_fail consecutive failed extensions, or the iteration or
            tree-size limit was hit
    """
    cfg = ctx.cfg
    group = tuple(element.group)
    if tuple(starts.group) != group:
        raise ValueError(f"Start group {starts.group} does not match element group {group}")
    realized = f"element:{element.id}"
    region = DynamicRegion.for_element(ctx, element)
    radii = ctx.radii(group)
    advance = np.array([cfg.advance_step_for(r) for r in radii])
    threshold = np.array([cfg.advance_threshold_for(r) for r in radii])

    def tolerance() -> np.ndarray:
        if cfg.region_goal_tolerance is not None:
            return np.full(len(group), cfg.region_goal_tolerance)
        return region.radii

    start = starts.as_array()
    if ctx.is_kinodynamic(group):
        return _region_kino(ctx, group, start, region, advance, threshold, tolerance, realized)

    step_sizes = np.array([cfg.step_size_for(r) for r in radii])
    tree = MotionTree(start)
    if region.within(start, threshold):
        region.advance(advance)
    if region.at_end and region.within(start, tolerance()):
        return _timed_path(ctx, group, start[None], realized, 0)

    consecutive = 0
    for iteration in range(cfg.max_iterations):
        ctx.tick()
        target = region.sample(ctx.rng)
        node = tree.nearest(target)
        p0 = tree.states[node]
        p1, _ = _steer(p0, target, step_sizes)
        if not _motion_valid(ctx, radii, p0, p1):
            consecutive += 1
            if consecutive >= cfg.n_fail:
                raise ElementFailure(f"{realized}: {consecutive} consecutive failed extensions", iteration + 1)
            continue
        consecutive = 0
        new = tree.add(p1, node)
        if region.within(p1, threshold):
            region.advance(advance)
        if region.at_end and region.within(p1, tolerance()):
            waypoints = np.array([tree.states[n] for n in tree.branch(new)])
            logger.debug(f"{realized}: {len(group)} robots done after {iteration + 1} iterations")
            return _timed_path(ctx, group, waypoints, realized, iteration + 1)
    raise ElementFailure(f"{realized}: no solution within {cfg.max_iterations} iterations", cfg.max_iterations)


def _region_kino(ctx: PlanningContext, group: Tuple[int, ...], start: np.ndarray, region: DynamicRegion,
                 advance: np.ndarray, threshold: np.ndarray, tolerance: Callable[[], np.ndarray],
                 realized: str) -> LocalPath:
    cfg = ctx.cfg
    radii = ctx.radii(group)
    tree = MotionTree(start)
    if region.within(start[:, :2], threshold):
        region.advance(advance)
    if region.at_end:
        finish = _try_finish(ctx, group, radii, start, region.centers, tolerance())
        if finish is not None:
            return _kino_path(ctx, group, tree, 0, finish, realized, 0)

    consecutive = 0
    for iteration in range(cfg.max_iterations):
        ctx.tick()
        target = TargetRegion(region.sample(ctx.rng), region.radii)
        node = kino_extend(ctx, group, tree, target)
        if node is None:
            consecutive += 1
            if consecutive >= cfg.n_fail:
                raise ElementFailure(f"{realized}: {consecutive} consecutive failed extensions", iteration + 1)
            continue
        consecutive = 0
        states = tree.states[node]
        if region.within(states[:, :2], threshold):
            region.advance(advance)
        if region.at_end:
            finish = _try_finish(ctx, group, radii, states, region.centers, tolerance())
            if finish is not None:
                return _kino_path(ctx, group, tree, node, finish, realized, iteration + 1)
        if len(tree) >= cfg.max_tree_nodes:
            raise ElementFailure(f"{realized}: tree reached {len(tree)} states", iteration + 1)
    raise ElementFailure(f"{realized}: no solution within {cfg.max_iterations} iterations", cfg.max_iterations)


def rrt_transition(ctx: PlanningContext, hyperarc: Hyperarc, starts: CompositeConfiguration) -> LocalPath:
    """
    Move the crossing robots of a transition from their incoming edges onto their outgoing edges.

    Samples a disk of radius 3·delta around the vertex; the goal places every robot in
    the region disk at its outgoing edge's entry offset.

    Raises:
        TransitionFailure: n_fail consecutive failed extensions
    """
    cfg = ctx.cfg
    group = tuple(starts.group)
    realized = f"hyperarc:{hyperarc.id}"
    outgoing = dict(hyperarc.outgoing)
    vertex = hyperarc.vertex
    radii = ctx.radii(group)
    goal_centers, goal_radii = [], []
    for robot in group:
        e = ctx.sk.edges[outgoing[robot]]
        delta = cfg.delta_for(ctx.robots[robot].radius)
        goal_centers.append(e.point_at(entry_offset(e, delta), e.direction_from(vertex)))
        goal_radii.append(cfg.region_radius_for(ctx.robots[robot].radius))
    goal_centers = np.array(goal_centers)
    goal_radii = np.maximum(np.minimum(np.array(goal_radii), clearances(ctx.ws, goal_centers)), MIN_REGION_RADIUS)

    center = ctx.sk.vertex_position(vertex)
    ball = 3.0 * ctx.delta(group)
    centers = np.repeat(center[None], len(group), axis=0)
    radii_ball = np.full(len(group), ball)

    def sample() -> np.ndarray:
        return sample_balls(ctx.rng, centers, radii_ball)

    start = starts.as_array()
    if ctx.is_kinodynamic(group):
        return _kino_goal_tree(ctx, group, start, sample, goal_centers, goal_radii, TransitionFailure, realized)
    sample_goal = _goal_sampler(ctx, radii, goal_centers, goal_radii, exact_first=False)
    return _holonomic_rrt(ctx, group, start, sample, sample_goal, TransitionFailure, realized,
                          cfg.n_fail, cfg.max_iterations)


def rrt_attach(ctx: PlanningContext, starts: CompositeConfiguration, targets: np.ndarray,
               target_radii: np.ndarray, realized: str) -> LocalPath:
    """
    Connect robots to target disks (start/goal attachment).

    Holonomic robots aim at the exact target first and fall back to points inside
    the disks; cars stop inside the disks.

    Raises:
        AttachmentFailure: n_fail consecutive failed extensions
    """
    cfg = ctx.cfg
    group = tuple(starts.group)
    start = starts.as_array()
    targets = np.asarray(targets, dtype=float)
    target_radii = np.asarray(target_radii, dtype=float)
    mids = 0.5 * (start[:, :2] + targets)
    spread = 0.5 * np.hypot(*(targets - start[:, :2]).T) + ctx.delta(group)

    def sample() -> np.ndarray:
        return sample_balls(ctx.rng, mids, spread)

    if ctx.is_kinodynamic(group):
        return _kino_goal_tree(ctx, group, start, sample, targets, target_radii, AttachmentFailure, realized)
    radii = ctx.radii(group)
    sample_goal = _goal_sampler(ctx, radii, targets, target_radii, exact_first=True)
    return _holonomic_rrt(ctx, group, start, sample, sample_goal, AttachmentFailure, realized,
                          cfg.n_fail, cfg.max_iterations)


def composite_rrt(ctx: PlanningContext, starts: CompositeConfiguration, goals: np.ndarray,
                  goal_radii: np.ndarray, realized: str, max_iterations: int) -> LocalPath:
    """Joint-space RRT over the whole workspace (uniform sampling, goal bias, no failure streak limit)."""
    group = tuple(starts.group)
    if ctx.is_kinodynamic(group):
        raise ValueError("composite_rrt plans holonomic robots only")
    xmin, ymin, xmax, ymax = ctx.ws.bounds
    m = len(group)
    radii = ctx.radii(group)

    def sample() -> np.ndarray:
        return np.column_stack([ctx.rng.uniform(xmin, xmax, m), ctx.rng.uniform(ymin, ymax, m)])

    sample_goal = _goal_sampler(ctx, radii, np.asarray(goals, dtype=float), np.asarray(goal_radii, dtype=float),
                                exact_first=True)
    return _holonomic_rrt(ctx, group, starts.as_array(), sample, sample_goal, LocalPlanningFailure, realized,
                          None, max_iterations)
