"""
Guided multi-robot planning: skeleton MAPF → task-space hypergraph → local paths.

Each round solves the MAPF problem on the workspace skeleton under the current
prohibitions, decomposes the solution into elements and hyperarcs, and plans
them in dependency order into a motion hypergraph. A local planner failure or a
collision between scheduled paths adds a prohibition and restarts the round.
The independent validator at the bottom of this module checks any solution
against the workspace only.
"""
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import PlannerConfig
from local_planners import (
    LocalPath,
    LocalPlanningFailure,
    PlanningContext,
    PlanningTimeout,
    entry_offset,
    hold_path,
    region_rrt_edge,
    rrt_attach,
    rrt_transition,
)
from scenarios import Scenario
from skeleton import (
    SkeletonConstructionError,
    WorkspaceSkeleton,
    annotate_capacities,
    attach_points,
    build_grid_skeleton,
    load_skeleton,
)
from skeleton_mapf import (
    EdgeGroupProhibition,
    JointProhibition,
    MapfSearchError,
    MapfSolution,
    ProhibitionConstraint,
    SkeletonQuery,
    VertexGroupProhibition,
    cbs,
    compute_edge_steps,
)
from task_hypergraph import (
    ELEMENT,
    HYPERARC,
    IDLE,
    TRAVERSE,
    StructuralError,
    TaskSpaceHypergraph,
    build_tsh,
    order_by_dependency,
)
from workspace import (
    CompositeConfiguration,
    Robot,
    clearances,
    integrate,
    normalize_angle,
)

logger = logging.getLogger(__name__)

ATTACH_START = "attach-start"
ATTACH_GOAL = "attach-goal"
HOLD = "hold"
PARKED = "parked"

REPLAY_TOLERANCE = 1e-6
START_TOLERANCE = 1e-6


class PlanningFailure(RuntimeError):
    """Planning gave up; carries the per-restart diagnostics and the active prohibitions."""

    def __init__(self, message: str, diagnostics: Sequence[str] = (), constraints: Sequence[str] = (),
                 stats: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics)
        self.constraints = list(constraints)
        self.stats = dict(stats or {})


# ============================================================
# Motion hypergraph
# ============================================================

@dataclass(frozen=True)
class PlanItem:
    kind: str   # ELEMENT, HYPERARC, ATTACH_START, ATTACH_GOAL, HOLD or PARKED
    id: int     # element/hyperarc id, or robot id for the other kinds

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.id}"


@dataclass
class ScheduledPath:
    """LocalPath placed at absolute tick `start`; parked entries never end."""
    item: PlanItem
    path: LocalPath
    start: int
    open_ended: bool = False
    owner: Optional["ScheduledPath"] = None

    @property
    def end(self) -> float:
        return math.inf if self.open_ended else self.start + self.path.steps

    @property
    def group(self) -> Tuple[int, ...]:
        return self.path.group

    @property
    def label(self) -> str:
        return f"{self.item.label}@{self.start}"

    def positions(self, ticks: np.ndarray) -> np.ndarray:
        """(len(ticks), m, 2) positions; states before/after the window are clamped."""
        index = np.clip(ticks - self.start, 0, self.path.steps)
        return self.path.states[index][..., :2]


@dataclass(frozen=True)
class MotionConflict:
    first: ScheduledPath
    second: ScheduledPath
    tick: int
    time: float
    robots: Tuple[int, int]


@dataclass
class MotionHypergraph:
    """Scheduled local paths plus the latest tick and state of every robot."""
    robots: Dict[int, Robot]
    dt: float
    entries: List[ScheduledPath] = field(default_factory=list)
    completion: Dict[int, int] = field(default_factory=dict)
    states: Dict[int, np.ndarray] = field(default_factory=dict)
    pair_checks: int = 0

    def add(self, entry: ScheduledPath):
        self.entries.append(entry)
        if entry.open_ended:
            return
        for i, robot in enumerate(entry.group):
            self.completion[robot] = entry.start + entry.path.steps
            self.states[robot] = entry.path.states[-1, i].copy()


def find_collisions(mh: MotionHypergraph, entry: ScheduledPath) -> List[MotionConflict]:
    """
    Collisions between `entry` and every scheduled path whose window overlaps it.

    Both sides are sampled on the shared dt grid; the earliest contact of each
    robot pair is reported. Entries with disjoint windows are skipped without
    being counted in `mh.pair_checks`.

    Returns:
        Conflicts sorted by time (earliest first)
    """
    conflicts = []
    for other in mh.entries:
        lo = max(entry.start, other.start)
        hi = min(entry.end, other.end)
        if lo > hi:
            continue
        pairs = [(i, j) for i, a in enumerate(entry.group) for j, b in enumerate(other.group) if a != b]
        if not pairs:
            continue
        mh.pair_checks += 1
        if math.isinf(hi):
            hi = lo
        ticks = np.arange(lo, int(hi) + 1)
        pa = entry.positions(ticks)
        pb = other.positions(ticks)
        ia = np.array([i for i, _ in pairs])
        ib = np.array([j for _, j in pairs])
        diff = pa[:, ia] - pb[:, ib]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        need = np.array([mh.robots[entry.group[i]].radius + mh.robots[other.group[j]].radius for i, j in pairs])
        hits = dist < need[None]
        for p in np.flatnonzero(hits.any(axis=0)):
            k = int(np.argmax(hits[:, p]))
            tick = int(ticks[k])
            robots = (entry.group[pairs[p][0]], other.group[pairs[p][1]])
            conflicts.append(MotionConflict(entry, other, tick, tick * mh.dt, robots))
    conflicts.sort(key=lambda c: (c.tick, c.second.start, c.robots))
    return conflicts


# ============================================================
# Solutions
# ============================================================

@dataclass
class Solution:
    """Per-robot states every dt seconds from t = 0 to the makespan; cars also carry controls."""
    dt: float
    trajectories: Dict[int, np.ndarray]
    controls: Dict[int, np.ndarray] = field(default_factory=dict)
    stats: Dict[str, Any] = field(default_factory=dict)
    method: str = "wg-dash"

    @property
    def makespan_s(self) -> float:
        steps = max((len(t) - 1 for t in self.trajectories.values()), default=0)
        return steps * self.dt


def solution_to_dict(solution: Solution) -> Dict[str, Any]:
    """JSON form; wall-clock timing stays out so identical runs give identical files."""
    robots = []
    for robot_id in sorted(solution.trajectories):
        traj = solution.trajectories[robot_id]
        entry: Dict[str, Any] = {
            "id": robot_id,
            "trajectory": [[round(k * solution.dt, 9)] + [float(v) for v in row] for k, row in enumerate(traj)],
        }
        if robot_id in solution.controls:
            entry["controls"] = [[float(a), float(s)] for a, s in solution.controls[robot_id]]
        robots.append(entry)
    stats = {k: v for k, v in solution.stats.items() if k != "plan_s"}
    return {"method": solution.method, "dt": solution.dt, "robots": robots, "stats": stats}


def solution_from_dict(data: Dict[str, Any]) -> Solution:
    try:
        trajectories, controls = {}, {}
        for entry in data["robots"]:
            rows = np.asarray(entry["trajectory"], dtype=float)
            trajectories[int(entry["id"])] = rows[:, 1:] if rows.size else np.zeros((0, 2))
            if "controls" in entry:
                controls[int(entry["id"])] = np.asarray(entry["controls"], dtype=float).reshape(-1, 2)
        return Solution(
            dt=float(data["dt"]),
            trajectories=trajectories,
            controls=controls,
            stats=dict(data.get("stats", {})),
            method=str(data.get("method", "wg-dash")),
        )
    except (KeyError, TypeError, IndexError) as e:
        raise ValueError(f"Malformed solution data: {e}") from e


def save_solution(solution: Solution, path: Union[str, Path]):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(solution_to_dict(solution), f, sort_keys=True)
        f.write("\n")
    logger.info(f"Saved solution ({len(solution.trajectories)} robots, makespan {solution.makespan_s:.1f}s) to {path}")


def load_solution(path: Union[str, Path]) -> Solution:
    with open(path, 'r', encoding='utf-8') as f:
        return solution_from_dict(json.load(f))


# ============================================================
# One planning round
# ============================================================

class _Restart(Exception):
    def __init__(self, cause: str, entries: Sequence[ScheduledPath], detail: str):
        super().__init__(detail)
        self.cause = cause
        self.entries = list(entries)
        self.detail = detail


class _MotionRound:
    """Plans one MAPF solution into a motion hypergraph."""

    def __init__(self, ctx: PlanningContext, scenario: Scenario, sol: MapfSolution, tsh: TaskSpaceHypergraph):
        self.ctx = ctx
        self.scenario = scenario
        self.sol = sol
        self.tsh = tsh
        self.mh = MotionHypergraph(robots=ctx.robots, dt=ctx.cfg.dt)
        for robot in scenario.robots:
            self.mh.completion[robot.id] = 0
            self.mh.states[robot.id] = np.array(scenario.starts[robot.id], dtype=float)

    # ---------- sequencing ----------

    def _item_robots(self, item: PlanItem) -> Tuple[int, ...]:
        if item.kind == ELEMENT:
            return self.tsh.elements[item.id].group
        if item.kind == HYPERARC:
            return tuple(r for r, _ in self.tsh.hyperarcs[item.id].incoming)
        return (item.id,)

    def sequence(self) -> List[PlanItem]:
        body = [PlanItem(o.kind, o.id) for o in order_by_dependency(self.tsh)]
        last_index: Dict[int, int] = {}
        for index, item in enumerate(body):
            for robot in self._item_robots(item):
                last_index[robot] = index

        items = [PlanItem(ATTACH_START, r) for r in sorted(self.sol.paths) if self.sol.paths[r].traverses]
        for index, item in enumerate(body):
            items.append(item)
            items.extend(PlanItem(ATTACH_GOAL, r) for r in sorted(last_index) if last_index[r] == index)
        items.extend(PlanItem(ATTACH_GOAL, r) for r in sorted(self.sol.paths) if r not in last_index)
        return items

    # ---------- scheduling ----------

    def _commit(self, entry: ScheduledPath):
        conflicts = find_collisions(self.mh, entry)
        if conflicts:
            c = conflicts[0]
            raise _Restart("conflict", [c.first, c.second],
                           f"robots {c.robots} collide at t={c.time:.1f}s "
                           f"({c.first.label} vs {c.second.label})")
        self.mh.add(entry)

    def _hold(self, group: Sequence[int], tick: int, owner: ScheduledPath):
        for robot in group:
            waiting = tick - self.mh.completion[robot]
            if waiting <= 0:
                continue
            path = hold_path(self.ctx, (robot,), self.mh.states[robot][None], waiting, realized=HOLD)
            self._commit(ScheduledPath(PlanItem(HOLD, robot), path, self.mh.completion[robot], owner=owner))

    def _starts(self, group: Sequence[int]) -> CompositeConfiguration:
        return CompositeConfiguration.from_mapping({r: tuple(self.mh.states[r]) for r in group})

    def _schedule(self, item: PlanItem, group: Sequence[int], tick: int, plan_fn):
        placeholder = ScheduledPath(item, LocalPath(tuple(group), np.zeros((1, len(group), 2)), self.ctx.cfg.dt),
                                    tick)
        self._hold(group, tick, placeholder)
        try:
            path = plan_fn()
        except LocalPlanningFailure as e:
            raise _Restart("failure", [placeholder], str(e)) from e
        entry = ScheduledPath(item, path, tick)
        self._commit(entry)
        return entry

    def _attach_resume(self, restart: _Restart, tick: int) -> Optional[int]:
        """Tick to retry a start attachment that only met another robot's start attachment."""
        if restart.cause != "conflict":
            return None
        other = restart.entries[1]
        owner = other.owner or other
        if other.open_ended or owner.item.kind != ATTACH_START:
            return None
        resume = max(self.mh.completion[r] for r in other.group)
        return resume if resume > tick else None

    def run_item(self, item: PlanItem):
        ctx = self.ctx
        cfg = ctx.cfg
        completion = self.mh.completion

        if item.kind == ELEMENT:
            el = self.tsh.elements[item.id]
            tick = max(completion[r] for r in el.group)
            if el.kind == TRAVERSE:
                self._schedule(item, el.group, tick, lambda: region_rrt_edge(ctx, el, self._starts(el.group)))
            else:
                robot = el.group[0]
                steps = int(round((el.interval[1] - el.interval[0]) * cfg.step_duration / cfg.dt))
                self._schedule(item, el.group, tick, lambda: hold_path(
                    ctx, el.group, self.mh.states[robot][None], steps, realized=f"element:{el.id}"))
            return

        if item.kind == HYPERARC:
            arc = self.tsh.hyperarcs[item.id]
            crossing = tuple(sorted(arc.crossing))
            if not crossing:
                return
            tick = max(completion[r] for r, _ in arc.incoming)
            self._schedule(item, crossing, tick, lambda: rrt_transition(ctx, arc, self._starts(crossing)))
            return

        robot = item.id
        radius = ctx.robots[robot].radius
        if item.kind == ATTACH_START:
            first = self.sol.paths[robot].traverses[0]
            edge = ctx.sk.edges[first.locus]
            target = edge.point_at(entry_offset(edge, cfg.delta_for(radius)), first.direction)
            disk = max(min(cfg.region_radius_for(radius), float(clearances(ctx.ws, target[None])[0])), 1e-3)
            tick = completion[robot]
            while True:
                try:
                    self._schedule(item, (robot,), tick, lambda: rrt_attach(
                        ctx, self._starts((robot,)), target[None], np.array([disk]), item.label))
                    return
                except _Restart as restart:
                    resume = self._attach_resume(restart, tick)
                    if resume is None:
                        raise
                    logger.debug(f"{item.label}: waits at start until tick {resume} ({restart.detail})")
                    tick = resume

        goal = np.array(self.scenario.goals[robot][:2], dtype=float)
        tolerance = cfg.goal_tolerance_for(radius)
        self._schedule(item, (robot,), completion[robot], lambda: rrt_attach(
            ctx, self._starts((robot,)), goal[None], np.array([tolerance]), item.label))
        parked = hold_path(ctx, (robot,), self.mh.states[robot][None], 0, realized=PARKED)
        self._commit(ScheduledPath(PlanItem(PARKED, robot), parked, completion[robot], open_ended=True))

    def run(self) -> MotionHypergraph:
        for item in self.sequence():
            if self.ctx.deadline is not None and time.monotonic() > self.ctx.deadline:
                raise PlanningTimeout("Wall-clock deadline exceeded")
            self.run_item(item)
        return self.mh

    # ---------- prohibitions ----------

    def _arc_part(self, hid: int) -> VertexGroupProhibition:
        arc = self.tsh.hyperarcs[hid]
        return VertexGroupProhibition(arc.vertex, arc.incoming, arc.outgoing)

    def _element_part(self, eid: int) -> Optional[ProhibitionConstraint]:
        el = self.tsh.elements[eid]
        if el.kind == TRAVERSE:
            return EdgeGroupProhibition(el.edge, frozenset(el.group))
        if el.kind != IDLE:
            return None
        transitions = [a for _, a in sorted(self.tsh.hyperarcs.items()) if a.is_transition]
        for arc in transitions:
            if eid in arc.head:
                return self._arc_part(arc.id)
        for arc in transitions:
            if eid in arc.tail:
                return self._arc_part(arc.id)
        return None

    def part_for(self, entry: ScheduledPath) -> Optional[ProhibitionConstraint]:
        item = entry.item
        if item.kind == HOLD:
            return self.part_for(entry.owner) if entry.owner is not None else None
        if item.kind == ELEMENT:
            return self._element_part(item.id)
        if item.kind == HYPERARC:
            return self._arc_part(item.id)
        elements = self.tsh.robot_elements.get(item.id, ())
        if not elements:
            return None
        return self._element_part(elements[0] if item.kind == ATTACH_START else elements[-1])

    def prohibition_for(self, entries: Sequence[ScheduledPath]) -> Optional[ProhibitionConstraint]:
        parts = []
        for entry in entries:
            part = self.part_for(entry)
            if part is not None and part not in parts:
                parts.append(part)
        if not parts:
            return None
        if len(parts) == 1:
            return parts[0]
        return JointProhibition(tuple(parts))

    # ---------- extraction ----------

    def extract(self) -> Tuple[Dict[int, np.ndarray], Dict[int, np.ndarray]]:
        makespan = max(self.mh.completion.values(), default=0)
        trajectories, controls = {}, {}
        for robot in self.scenario.robots:
            rid = robot.id
            states = [np.array(self.scenario.starts[rid], dtype=float)]
            ctrl: List[np.ndarray] = []
            own = sorted((e for e in self.mh.entries if rid in e.group and not e.open_ended), key=lambda e: e.start)
            for entry in own:
                if entry.start != len(states) - 1:
                    raise StructuralError(f"Robot {rid}: entry {entry.label} is not contiguous")
                index = entry.group.index(rid)
                states.extend(entry.path.states[1:, index])
                if entry.path.controls is not None:
                    ctrl.extend(entry.path.controls[:, index])
            while len(states) <= makespan:
                if robot.is_kinodynamic:
                    states.append(np.array(integrate(robot, states[-1], (0.0, 0.0), self.ctx.cfg.dt)))
                    ctrl.append(np.zeros(2))
                else:
                    states.append(states[-1].copy())
            trajectories[rid] = np.array(states)
            if robot.is_kinodynamic:
                controls[rid] = np.array(ctrl).reshape(-1, 2)
        return trajectories, controls


# ============================================================
# Planner
# ============================================================

def _prepare_skeleton(scenario: Scenario, cfg: PlannerConfig,
                      skeleton: Optional[WorkspaceSkeleton]) -> WorkspaceSkeleton:
    if skeleton is not None:
        return skeleton
    if scenario.skeleton_path:
        return load_skeleton(scenario.skeleton_path, scenario.workspace)
    cell = cfg.cell_for(min(r.radius for r in scenario.robots))
    return build_grid_skeleton(scenario.workspace, cell)


def plan(scenario: Scenario, cfg: Optional[PlannerConfig] = None,
         skeleton: Optional[WorkspaceSkeleton] = None) -> Solution:
    """
    Plan collision-free trajectories for every robot of the scenario.

    Args:
        scenario: Workspace, robots, starts and goals
        cfg: Planner tunables (defaults when None); cfg.seed drives all randomness
        skeleton: Pre-built skeleton (built from the workspace when None)

    Returns:
        Solution sampled every cfg.dt seconds

    Raises:
        PlanningFailure: no skeleton, no MAPF solution under the active
            prohibitions, restart budget exhausted, or timeout
    """
    cfg = cfg or PlannerConfig()
    started = time.perf_counter()
    deadline = time.monotonic() + cfg.timeout_s
    robots = scenario.robot_map
    stats: Dict[str, Any] = {"iterations": 0, "restarts": 0, "cbs_expansions": 0, "pair_checks": 0}
    diagnostics: List[str] = []
    prohibitions: List[ProhibitionConstraint] = []

    def failure(message: str) -> PlanningFailure:
        stats["plan_s"] = time.perf_counter() - started
        logger.error(f"❌ {message}")
        return PlanningFailure(message, diagnostics, [p.describe() for p in prohibitions], stats)

    max_radius = max(r.radius for r in scenario.robots)
    try:
        sk = _prepare_skeleton(scenario, cfg, skeleton)
    except SkeletonConstructionError as e:
        raise failure(f"No skeleton: {e}") from e
    points = [scenario.starts[r.id][:2] for r in scenario.robots] + [scenario.goals[r.id][:2] for r in scenario.robots]
    sk, vertex_ids = attach_points(sk, points, snap=cfg.delta_for(max_radius))
    caps = annotate_capacities(sk, max_radius, cfg.capacity_mode)
    edge_steps = compute_edge_steps(sk, min(r.v_max for r in scenario.robots), cfg.step_duration)
    n = len(scenario.robots)
    queries = [SkeletonQuery(r.id, vertex_ids[i], vertex_ids[n + i]) for i, r in enumerate(scenario.robots)]
    logger.info(f"Planning {scenario.name}: {n} robots, skeleton {len(sk.vertices)} vertices / {len(sk.edges)} edges")

    for restart in range(cfg.restart_budget + 1):
        if time.monotonic() > deadline:
            raise failure(f"Timeout after {restart} restarts")
        try:
            sol = cbs(sk, caps, queries, prohibitions, edge_steps, cfg.cbs_node_budget,
                      cfg.prohibition_match, cfg.mapf_horizon)
            stats["cbs_expansions"] += sol.expansions
            tsh = build_tsh(sol)
        except (MapfSearchError, StructuralError) as e:
            raise failure(f"Skeleton search failed with {len(prohibitions)} prohibitions: {e}") from e

        ctx = PlanningContext(
            ws=scenario.workspace,
            robots=robots,
            cfg=cfg,
            rng=np.random.default_rng([cfg.seed, restart]),
            sk=sk,
            deadline=deadline,
        )
        motion = _MotionRound(ctx, scenario, sol, tsh)
        try:
            motion.run()
        except PlanningTimeout as e:
            stats["iterations"] += ctx.iterations
            raise failure(f"Timeout after {restart} restarts: {e}") from e
        except _Restart as r:
            stats["iterations"] += ctx.iterations
            stats["pair_checks"] += motion.mh.pair_checks
            prohibition = motion.prohibition_for(r.entries)
            item = "+".join(e.label for e in r.entries)
            if prohibition is None:
                raise failure(f"No prohibition derivable for {item}: {r.detail}")
            if prohibition in prohibitions:
                logger.warning(f"Prohibition repeated: {prohibition.describe()}")
            else:
                prohibitions.append(prohibition)
            line = (f"restart={restart + 1} cause={r.cause} item={item} "
                    f"constraint={prohibition.describe()} active={len(prohibitions)}")
            diagnostics.append(line)
            logger.info(line)
            stats["restarts"] = restart + 1
            continue

        stats["iterations"] += ctx.iterations
        stats["pair_checks"] += motion.mh.pair_checks
        trajectories, controls = motion.extract()
        solution = Solution(dt=cfg.dt, trajectories=trajectories, controls=controls, stats=stats)
        stats["makespan_s"] = solution.makespan_s
        stats["plan_s"] = time.perf_counter() - started
        logger.info(f"✅ {scenario.name}: makespan {solution.makespan_s:.1f}s after {restart} restarts "
                    f"({stats['plan_s']:.2f}s)")
        return solution

    raise failure(f"Restart budget of {cfg.restart_budget} exhausted")


# ============================================================
# Independent validation
# ============================================================

@dataclass(frozen=True)
class Violation:
    kind: str   # shape, obstacle, separation, start, goal, velocity, control, replay
    time: float
    robots: Tuple[int, ...]
    detail: str


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def count(self, kind: str) -> int:
        return sum(1 for v in self.violations if v.kind == kind)

    def summary(self) -> str:
        if self.ok:
            return "no violations"
        kinds = sorted({v.kind for v in self.violations})
        return ", ".join(f"{self.count(k)} {k}" for k in kinds)


def _replay_error(robot: Robot, state: np.ndarray, control: np.ndarray, following: np.ndarray, dt: float) -> float:
    predicted = np.array(integrate(robot, state, (float(control[0]), float(control[1])), dt))
    diff = np.abs(predicted - following)
    diff[2] = abs(normalize_angle(predicted[2] - following[2]))
    return float(diff.max())


def validate(solution: Solution, scenario: Scenario, cfg: Optional[PlannerConfig] = None) -> ValidationReport:
    """
    Check a solution against the scenario using workspace predicates only.

    Checks obstacle clearance and pairwise separation at every sample, the start
    and goal positions, the speed limit of holonomic robots, and the control
    bounds and exact replay of car trajectories.
    """
    cfg = cfg or PlannerConfig()
    dt = solution.dt
    ws = scenario.workspace
    report = ValidationReport()
    add = report.violations.append

    checked: Dict[int, np.ndarray] = {}
    for robot in scenario.robots:
        rid = robot.id
        traj = solution.trajectories.get(rid)
        if traj is None:
            add(Violation("shape", 0.0, (rid,), "missing trajectory"))
            continue
        traj = np.asarray(traj, dtype=float)
        if traj.ndim != 2 or len(traj) == 0 or traj.shape[1] != robot.state_dim:
            add(Violation("shape", 0.0, (rid,), f"trajectory shape {traj.shape}"))
            continue
        checked[rid] = traj

        pts = traj[:, :2]
        clr = clearances(ws, pts)
        for k in np.flatnonzero(clr < robot.radius):
            add(Violation("obstacle", k * dt, (rid,), f"clearance {clr[k]:.4f} < radius {robot.radius}"))

        start = np.array(scenario.starts[rid][:2])
        if np.hypot(*(pts[0] - start)) > START_TOLERANCE:
            add(Violation("start", 0.0, (rid,), f"starts at {pts[0].tolist()}, expected {start.tolist()}"))
        goal = np.array(scenario.goals[rid][:2])
        miss = float(np.hypot(*(pts[-1] - goal)))
        if miss > cfg.goal_tolerance_for(robot.radius) + 1e-9:
            add(Violation("goal", (len(traj) - 1) * dt, (rid,), f"ends {miss:.4f} from goal"))

        if not robot.is_kinodynamic:
            step = np.hypot(*np.diff(pts, axis=0).T)
            for k in np.flatnonzero(step > robot.v_max * dt + 1e-9):
                add(Violation("velocity", k * dt, (rid,), f"moved {step[k]:.4f} in one step"))
            continue

        ctrl = solution.controls.get(rid)
        if ctrl is None or np.asarray(ctrl).shape != (len(traj) - 1, 2):
            add(Violation("shape", 0.0, (rid,), "controls missing or of wrong length"))
            continue
        ctrl = np.asarray(ctrl, dtype=float)
        dyn = robot.dynamics
        for k in np.flatnonzero(np.abs(traj[:, 3]) > robot.v_max + 1e-9):
            add(Violation("velocity", k * dt, (rid,), f"speed {traj[k, 3]:.4f}"))
        for k, (accel, steer) in enumerate(ctrl):
            if abs(accel) > dyn.a_max + 1e-12 or abs(steer) > dyn.steer_max + 1e-12:
                add(Violation("control", k * dt, (rid,), f"control ({accel:.4f}, {steer:.4f}) out of bounds"))
                continue
            error = _replay_error(robot, traj[k], ctrl[k], traj[k + 1], dt)
            if error > REPLAY_TOLERANCE:
                add(Violation("replay", (k + 1) * dt, (rid,), f"replay error {error:.2e}"))

    lengths = {len(t) for t in checked.values()}
    if len(lengths) > 1:
        add(Violation("shape", 0.0, tuple(sorted(checked)), f"trajectory lengths differ: {sorted(lengths)}"))
        return report
    ids = sorted(checked)
    robots = scenario.robot_map
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            diff = checked[a][:, :2] - checked[b][:, :2]
            dist = np.hypot(diff[:, 0], diff[:, 1])
            for k in np.flatnonzero(dist < robots[a].radius + robots[b].radius):
                add(Violation("separation", k * dt, (a, b), f"distance {dist[k]:.4f}"))
    return report
