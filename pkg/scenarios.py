"""
Benchmark scenarios: robots with start/goal configurations in a workspace.

Two generators build the standard layouts: a warehouse of shelf rows where
vertically aligned robot pairs swap places, and a braided grid maze with random
start and goal cells.
"""
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

import config
from workspace import (
    CarDynamics,
    Configuration,
    Robot,
    Workspace,
    config_valid,
    robots_collide,
    workspace_from_dict,
    workspace_to_dict,
)

logger = logging.getLogger(__name__)

# Warehouse layout (meters)
SHELF_WIDTH = 1.0
SHELF_HEIGHT = 4.0
CROSS_CORRIDOR_HEIGHT = 2.0
SIDE_MARGIN = 2.0

# Grid maze
WALL_THICKNESS = 0.25
BRAID_FRACTION = 0.15

# Car defaults for kinodynamic variants
CAR_WHEELBASE = 0.5
CAR_A_MAX = 1.0
CAR_STEER_MAX = 0.6


class GenerationError(RuntimeError):
    """A scenario could not be generated from the requested parameters."""


@dataclass
class Scenario:
    name: str
    workspace: Workspace
    robots: List[Robot]
    starts: Dict[int, Configuration]
    goals: Dict[int, Configuration]
    seed: int = 0
    skeleton_path: Optional[str] = None

    def __post_init__(self):
        ids = [r.id for r in self.robots]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Duplicate robot ids in scenario {self.name}")
        if set(self.starts) != set(ids) or set(self.goals) != set(ids):
            raise ValueError(f"Scenario {self.name}: every robot needs exactly one start and one goal")
        self.robots = sorted(self.robots, key=lambda r: r.id)
        for which, configs in (("start", self.starts), ("goal", self.goals)):
            for robot in self.robots:
                c = tuple(float(v) for v in configs[robot.id])
                if len(c) != robot.state_dim:
                    raise ValueError(f"Robot {robot.id}: {which} needs {robot.state_dim} components, got {len(c)}")
                if not config_valid(self.workspace, robot, c):
                    raise ValueError(f"Robot {robot.id}: {which} {c[:2]} is not collision-free")
                configs[robot.id] = c
            for i, a in enumerate(self.robots):
                for b in self.robots[i + 1:]:
                    if robots_collide(a, configs[a.id], b, configs[b.id]):
                        raise ValueError(f"Robots {a.id} and {b.id} overlap at their {which}s")

    @property
    def robot_map(self) -> Dict[int, Robot]:
        return {r.id: r for r in self.robots}

    @property
    def is_kinodynamic(self) -> bool:
        return any(r.is_kinodynamic for r in self.robots)


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    return {
        "name": scenario.name,
        "seed": scenario.seed,
        "workspace": workspace_to_dict(scenario.workspace),
        "agents": [
            {
                "robot": robot.to_dict(),
                "start": list(scenario.starts[robot.id]),
                "goal": list(scenario.goals[robot.id]),
            }
            for robot in scenario.robots
        ],
        "skeleton": scenario.skeleton_path,
    }


def scenario_from_dict(data: Dict[str, Any]) -> Scenario:
    try:
        robots, starts, goals = [], {}, {}
        for agent in data["agents"]:
            robot = Robot.from_dict(agent["robot"])
            robots.append(robot)
            starts[robot.id] = tuple(float(v) for v in agent["start"])
            goals[robot.id] = tuple(float(v) for v in agent["goal"])
        return Scenario(
            name=str(data.get("name", "scenario")),
            workspace=workspace_from_dict(data["workspace"]),
            robots=robots,
            starts=starts,
            goals=goals,
            seed=int(data.get("seed", 0)),
            skeleton_path=data.get("skeleton"),
        )
    except (KeyError, TypeError) as e:
        raise ValueError(f"Malformed scenario data: {e}") from e


def save_scenario(scenario: Scenario, path: Union[str, Path]):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(scenario_to_dict(scenario), f, indent=2, sort_keys=True)
    logger.info(f"Saved scenario {scenario.name} ({len(scenario.robots)} robots) to {path}")


def load_scenario(path: Union[str, Path]) -> Scenario:
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    scenario = scenario_from_dict(data)
    logger.info(f"Loaded scenario {scenario.name} with {len(scenario.robots)} robots from {path}")
    return scenario


def _rectangle(x0: float, y0: float, x1: float, y1: float) -> Tuple[Tuple[float, float], ...]:
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def _make_robot(robot_id: int, radius: float, v_max: float, dynamics: Optional[CarDynamics]) -> Robot:
    return Robot(id=robot_id, radius=radius, v_max=v_max, dynamics=dynamics)


def _config(robot: Robot, x: float, y: float, heading: float = 0.0) -> Configuration:
    if robot.is_kinodynamic:
        return (x, y, heading, 0.0)
    return (x, y)


def gen_warehouse(aisles: int, aisle_width_factor: float = 2.5, robots: int = 2,
                  radius: float = config.DEFAULT_ROBOT_RADIUS, v_max: float = config.DEFAULT_ROBOT_VMAX,
                  dynamics: Optional[CarDynamics] = None, seed: int = 0) -> Scenario:
    """
    Shelf rows separated by vertical aisles, joined by cross corridors at the
    top and bottom and open margins on both sides.

    Robot pair j starts at the top and bottom cross corridor above/below aisle j;
    the two goals are swapped.

    Args:
        aisles: Number of vertical aisles
        aisle_width_factor: Aisle width as a multiple of the robot diameter
        robots: Even number of robots, at most 2 * aisles
        radius: Robot radius
        v_max: Robot speed limit
        dynamics: Car parameters for the kinodynamic variant (None = holonomic)
        seed: Stored in the scenario; the layout itself is deterministic

    Raises:
        GenerationError: robots is zero or odd, or there are not enough aisles
    """
    if robots <= 0:
        raise GenerationError("A warehouse scenario needs at least one robot pair")
    if robots % 2:
        raise GenerationError(f"Warehouse robots come in swap pairs, got {robots}")
    if aisles < 1 or robots // 2 > aisles:
        raise GenerationError(f"{robots // 2} robot pairs do not fit into {aisles} aisles")
    if aisle_width_factor <= 0:
        raise GenerationError("aisle_width_factor must be positive")

    width = aisle_width_factor * 2.0 * radius
    pitch = SHELF_WIDTH + width
    xmax = 2.0 * SIDE_MARGIN + (aisles + 1) * SHELF_WIDTH + aisles * width
    ymax = 2.0 * CROSS_CORRIDOR_HEIGHT + SHELF_HEIGHT
    shelves = tuple(
        _rectangle(SIDE_MARGIN + k * pitch, CROSS_CORRIDOR_HEIGHT,
                   SIDE_MARGIN + k * pitch + SHELF_WIDTH, CROSS_CORRIDOR_HEIGHT + SHELF_HEIGHT)
        for k in range(aisles + 1)
    )
    ws = Workspace(bounds=(0.0, 0.0, xmax, ymax), obstacles=shelves)

    members, starts, goals = [], {}, {}
    top_y = ymax - 0.5 * CROSS_CORRIDOR_HEIGHT
    bottom_y = 0.5 * CROSS_CORRIDOR_HEIGHT
    for j in range(robots // 2):
        cx = SIDE_MARGIN + j * pitch + SHELF_WIDTH + 0.5 * width
        top = _make_robot(2 * j, radius, v_max, dynamics)
        bottom = _make_robot(2 * j + 1, radius, v_max, dynamics)
        members.extend([top, bottom])
        starts[top.id] = _config(top, cx, top_y, -math.pi / 2)
        goals[top.id] = _config(top, cx, bottom_y, -math.pi / 2)
        starts[bottom.id] = _config(bottom, cx, bottom_y, math.pi / 2)
        goals[bottom.id] = _config(bottom, cx, top_y, math.pi / 2)

    kind = "k-warehouse" if dynamics is not None else "warehouse"
    name = f"{kind}-a{aisles}-w{aisle_width_factor:g}-r{robots}"
    try:
        return Scenario(name=name, workspace=ws, robots=members, starts=starts, goals=goals, seed=seed)
    except ValueError as e:
        raise GenerationError(f"Infeasible warehouse packing: {e}") from e


def _recursive_division(nx_cells: int, ny_cells: int, rng: np.random.Generator):
    """
    Perfect maze by recursive division.

    Returns:
        (vertical, horizontal) boolean wall arrays: vertical[i, j] separates cell
        (i, j) from (i + 1, j); horizontal[i, j] separates (i, j) from (i, j + 1)
    """
    vertical = np.zeros((max(nx_cells - 1, 0), ny_cells), dtype=bool)
    horizontal = np.zeros((nx_cells, max(ny_cells - 1, 0)), dtype=bool)
    stack = [(0, 0, nx_cells, ny_cells)]
    while stack:
        x, y, w, h = stack.pop()
        if w < 2 and h < 2:
            continue
        if w > h:
            split_vertical = True
        elif h > w:
            split_vertical = False
        else:
            split_vertical = bool(rng.random() < 0.5)
        if split_vertical:
            wx = x + int(rng.integers(0, w - 1))
            gap = y + int(rng.integers(0, h))
            vertical[wx, y:y + h] = True
            vertical[wx, gap] = False
            stack.append((x, y, wx - x + 1, h))
            stack.append((wx + 1, y, x + w - wx - 1, h))
        else:
            wy = y + int(rng.integers(0, h - 1))
            gap = x + int(rng.integers(0, w))
            horizontal[x:x + w, wy] = True
            horizontal[gap, wy] = False
            stack.append((x, y, w, wy - y + 1))
            stack.append((x, wy + 1, w, y + h - wy - 1))
    return vertical, horizontal


def gen_gridmaze(cells: Sequence[int] = (4, 4), passage_width_factor: float = 2.1, robots: int = 2,
                 seed: int = 0, radius: float = config.DEFAULT_ROBOT_RADIUS,
                 v_max: float = config.DEFAULT_ROBOT_VMAX, dynamics: Optional[CarDynamics] = None) -> Scenario:
    """
    Braided grid maze with random, distinct start cells and distinct goal cells.

    The maze is carved by recursive division and then a fraction of the interior
    walls is removed so that corridors intersect and form loops. The workspace
    bounds act as the outer wall.

    Raises:
        GenerationError: more robots than cells, or an empty grid
    """
    nx_cells, ny_cells = (int(c) for c in cells)
    if nx_cells < 1 or ny_cells < 1:
        raise GenerationError(f"Grid maze needs at least one cell, got {nx_cells}x{ny_cells}")
    n_cells = nx_cells * ny_cells
    if robots <= 0 or robots > n_cells:
        raise GenerationError(f"Cannot place {robots} robots in {n_cells} cells")
    if passage_width_factor <= 0:
        raise GenerationError("passage_width_factor must be positive")

    rng = np.random.default_rng(seed)
    vertical, horizontal = _recursive_division(nx_cells, ny_cells, rng)
    for walls in (vertical, horizontal):
        idx = np.flatnonzero(walls)
        if len(idx):
            n_remove = int(round(BRAID_FRACTION * len(idx)))
            walls.flat[rng.choice(idx, size=n_remove, replace=False)] = False

    width = passage_width_factor * 2.0 * radius
    pitch = width + WALL_THICKNESS
    xmax = nx_cells * pitch - WALL_THICKNESS
    ymax = ny_cells * pitch - WALL_THICKNESS

    obstacles = []
    for i in range(nx_cells - 1):
        x0 = i * pitch + width
        for j in range(ny_cells - 1):
            y0 = j * pitch + width
            obstacles.append(_rectangle(x0, y0, x0 + WALL_THICKNESS, y0 + WALL_THICKNESS))
    for i, j in zip(*np.nonzero(vertical)):
        x0 = i * pitch + width
        obstacles.append(_rectangle(x0, j * pitch, x0 + WALL_THICKNESS, j * pitch + width))
    for i, j in zip(*np.nonzero(horizontal)):
        y0 = j * pitch + width
        obstacles.append(_rectangle(i * pitch, y0, i * pitch + width, y0 + WALL_THICKNESS))
    ws = Workspace(bounds=(0.0, 0.0, xmax, ymax), obstacles=tuple(obstacles))

    def center(cell: int) -> Tuple[float, float]:
        i, j = divmod(int(cell), ny_cells)
        return i * pitch + 0.5 * width, j * pitch + 0.5 * width

    start_cells = rng.choice(n_cells, size=robots, replace=False)
    goal_cells = rng.choice(n_cells, size=robots, replace=False)
    members, starts, goals = [], {}, {}
    for robot_id, (s, g) in enumerate(zip(start_cells, goal_cells)):
        robot = _make_robot(robot_id, radius, v_max, dynamics)
        members.append(robot)
        heading = float(rng.uniform(-math.pi, math.pi)) if dynamics is not None else 0.0
        starts[robot_id] = _config(robot, *center(s), heading)
        goals[robot_id] = _config(robot, *center(g), heading)

    name = f"gridmaze-{nx_cells}x{ny_cells}-w{passage_width_factor:g}-r{robots}-s{seed}"
    try:
        scenario = Scenario(name=name, workspace=ws, robots=members, starts=starts, goals=goals, seed=seed)
    except ValueError as e:
        raise GenerationError(f"Infeasible maze placement: {e}") from e
    logger.debug(f"Generated {name}: {len(obstacles)} wall blocks")
    return scenario
