"""
Reference planners for the benchmark.

Composite RRT plans all robots jointly in the composite space; the prioritized
planner plans robots one by one in id order with a space-time RRT that treats
the trajectories of earlier robots (and their parked goals) as moving obstacles.
Both produce the same Solution type as the guided planner and are checked by
the same validator.
"""
import logging
import math
import time
from typing import Dict, List, Optional

import numpy as np

from config import PlannerConfig
from guided_dash import PlanningFailure, Solution
from local_planners import (
    LocalPlanningFailure,
    MotionTree,
    PlanningContext,
    PlanningTimeout,
    composite_rrt,
)
from scenarios import Scenario
from workspace import CompositeConfiguration, Robot, clearances

logger = logging.getLogger(__name__)

MIN_SPEED_FACTOR = 0.25


def _require_holonomic(scenario: Scenario, method: str):
    if scenario.is_kinodynamic:
        raise PlanningFailure(f"{method} plans holonomic robots only")


def baseline_composite_rrt(scenario: Scenario, cfg: Optional[PlannerConfig] = None) -> Solution:
    """
    Single RRT in the joint configuration space of all robots.

    Raises:
        PlanningFailure: timeout, iteration limit, or car robots in the scenario
    """
    cfg = cfg or PlannerConfig()
    _require_holonomic(scenario, "composite-rrt")
    started = time.perf_counter()
    ctx = PlanningContext(
        ws=scenario.workspace,
        robots=scenario.robot_map,
        cfg=cfg,
        rng=np.random.default_rng([cfg.seed, 0]),
        deadline=time.monotonic() + cfg.timeout_s,
    )
    starts = CompositeConfiguration.from_mapping(scenario.starts)
    goals = np.array([scenario.goals[r][:2] for r in starts.group])
    radii = np.array([cfg.goal_tolerance_for(scenario.robot_map[r].radius) for r in starts.group])
    try:
        path = composite_rrt(ctx, starts, goals, radii, "composite-rrt", cfg.baseline_max_iterations)
    except (LocalPlanningFailure, PlanningTimeout) as e:
        stats = {"iterations": ctx.iterations, "plan_s": time.perf_counter() - started}
        raise PlanningFailure(f"Composite RRT failed: {e}", stats=stats) from e

    trajectories = {r: path.states[:, i].copy() for i, r in enumerate(path.group)}
    solution = Solution(dt=cfg.dt, trajectories=trajectories, method="composite-rrt")
    solution.stats = {
        "iterations": ctx.iterations,
        "restarts": 0,
        "makespan_s": solution.makespan_s,
        "plan_s": time.perf_counter() - started,
    }
    logger.info(f"✅ composite-rrt {scenario.name}: makespan {solution.makespan_s:.1f}s")
    return solution


class _MovingObstacles:
    """Trajectories of already planned robots; each stays at its last state forever."""

    def __init__(self):
        self.trajectories: List[np.ndarray] = []
        self.radii: List[float] = []

    def add(self, trajectory: np.ndarray, radius: float):
        self.trajectories.append(np.asarray(trajectory, dtype=float)[:, :2])
        self.radii.append(radius)

    @property
    def horizon(self) -> int:
        return max((len(t) for t in self.trajectories), default=1)

    def clear(self, points: np.ndarray, ticks: np.ndarray, radius: float) -> bool:
        """True when a robot of `radius` at points[k] at ticks[k] touches no planned robot."""
        for traj, other in zip(self.trajectories, self.radii):
            at = traj[np.minimum(ticks, len(traj) - 1)]
            if (np.hypot(*(points - at).T) < radius + other).any():
                return False
        return True

    def clear_from(self, point: np.ndarray, tick: int, radius: float) -> bool:
        """True when `point` stays untouched from `tick` on."""
        for traj, other in zip(self.trajectories, self.radii):
            tail = traj[min(tick, len(traj) - 1):]
            if (np.hypot(*(tail - point).T) < radius + other).any():
                return False
        return True


def _space_time_rrt(ctx: PlanningContext, robot: Robot, start: np.ndarray, goal: np.ndarray,
                    obstacles: _MovingObstacles, max_iterations: int) -> np.ndarray:
    """
    RRT over (x, y, tick) for one robot among moving obstacles.

    Every extension moves toward the sample at a random fraction of v_max, one
    sample per tick, so all states lie on the dt grid the validator checks.

    Returns:
        (T + 1, 2) positions ending at the goal

    Raises:
        LocalPlanningFailure: iteration limit reached
    """
    cfg = ctx.cfg
    dt = cfg.dt
    xmin, ymin, xmax, ymax = ctx.ws.bounds
    step = cfg.step_size_for(robot.radius)
    if np.allclose(start, goal) and obstacles.clear_from(goal, 0, robot.radius):
        return start[None].copy()
    tree = MotionTree(np.array([[start[0], start[1], 0.0]]))

    for iteration in range(max_iterations):
        ctx.tick()
        to_goal = ctx.rng.random() < cfg.goal_bias
        target = goal if to_goal else np.array([ctx.rng.uniform(xmin, xmax), ctx.rng.uniform(ymin, ymax)])
        node = tree.nearest(target[None])
        x, y, t0 = tree.states[node][0]
        p0 = np.array([x, y])
        delta = target - p0
        dist = float(np.hypot(*delta))
        if dist == 0:
            continue
        reach = min(dist, step)
        speed = robot.v_max * ctx.rng.uniform(MIN_SPEED_FACTOR, 1.0)
        k = max(1, math.ceil(reach / (speed * dt) - 1e-9))
        frac = np.arange(1, k + 1)[:, None] / k
        pts = p0[None] + frac * (delta * reach / dist)[None]
        ticks = int(t0) + np.arange(1, k + 1)
        if not ctx.ws.in_bounds_mask(pts).all() or (clearances(ctx.ws, pts) < robot.radius).any():
            continue
        if not obstacles.clear(pts, ticks, robot.radius):
            continue
        new = tree.add(np.array([[pts[-1, 0], pts[-1, 1], float(ticks[-1])]]), node, (pts, ticks))
        if reach == dist and np.allclose(pts[-1], goal) and obstacles.clear_from(goal, int(ticks[-1]), robot.radius):
            positions = [tree.states[0][:, :2]]
            for n in tree.branch(new)[1:]:
                positions.append(tree.segments[n][0])
            logger.debug(f"Robot {robot.id}: space-time RRT reached goal after {iteration + 1} iterations")
            return np.concatenate(positions)
    raise LocalPlanningFailure(f"Robot {robot.id}: no space-time path within {max_iterations} iterations",
                               max_iterations)


def baseline_prioritized(scenario: Scenario, cfg: Optional[PlannerConfig] = None) -> Solution:
    """
    Plan robots in id order; earlier trajectories are fixed moving obstacles.

    There is no replanning across priorities: the first robot without a path
    fails the whole run.

    Raises:
        PlanningFailure: timeout, a robot without a path, or car robots in the scenario
    """
    cfg = cfg or PlannerConfig()
    _require_holonomic(scenario, "prioritized")
    started = time.perf_counter()
    ctx = PlanningContext(
        ws=scenario.workspace,
        robots=scenario.robot_map,
        cfg=cfg,
        rng=np.random.default_rng([cfg.seed, 0]),
        deadline=time.monotonic() + cfg.timeout_s,
    )
    obstacles = _MovingObstacles()
    planned: Dict[int, np.ndarray] = {}
    for robot in scenario.robots:
        start = np.array(scenario.starts[robot.id][:2], dtype=float)
        goal = np.array(scenario.goals[robot.id][:2], dtype=float)
        try:
            positions = _space_time_rrt(ctx, robot, start, goal, obstacles, cfg.baseline_max_iterations)
        except (LocalPlanningFailure, PlanningTimeout) as e:
            stats = {"iterations": ctx.iterations, "plan_s": time.perf_counter() - started}
            raise PlanningFailure(f"Prioritized planning failed: {e}", stats=stats) from e
        planned[robot.id] = positions
        obstacles.add(positions, robot.radius)
        logger.debug(f"Robot {robot.id}: {len(positions) - 1} steps")

    horizon = max(len(p) for p in planned.values())
    trajectories = {
        rid: np.vstack([p, np.repeat(p[-1:], horizon - len(p), axis=0)]) for rid, p in planned.items()
    }
    solution = Solution(dt=cfg.dt, trajectories=trajectories, method="prioritized")
    solution.stats = {
        "iterations": ctx.iterations,
        "restarts": 0,
        "makespan_s": solution.makespan_s,
        "plan_s": time.perf_counter() - started,
    }
    logger.info(f"✅ prioritized {scenario.name}: makespan {solution.makespan_s:.1f}s")
    return solution
