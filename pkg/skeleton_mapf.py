"""
Capacity-constrained Conflict-Based Search over the workspace skeleton.

Robots sharing a corridor within its capacity are not in conflict: they are
meant to be planned together later. The high level branches only on capacity
excess and on violated prohibitions injected by the motion layer.
"""
import heapq
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

import config
from skeleton import CapacityAnnotation, WorkspaceSkeleton

logger = logging.getLogger(__name__)

TRAVERSE = "traverse"
WAIT = "wait"
EDGE = "edge"
VERTEX = "vertex"


class LowLevelFailure(RuntimeError):
    """No single-robot path satisfies the constraints within the horizon."""


class MapfSearchError(RuntimeError):
    """The constraint tree was exhausted or ran out of node budget."""


@dataclass(frozen=True)
class SkeletonQuery:
    robot: int
    start: int
    goal: int


@dataclass(frozen=True)
class Move:
    """
    One timed step of a skeleton path.

    A traverse moves from `origin` to `target` along edge `locus`; a wait stays on
    vertex `locus` (origin == target == locus, direction 0).
    """
    kind: str
    locus: int
    enter: int
    exit: int
    origin: int
    target: int
    direction: int = 0

    @property
    def is_traverse(self) -> bool:
        return self.kind == TRAVERSE


@dataclass(frozen=True)
class TimedSkeletonPath:
    robot: int
    moves: Tuple[Move, ...]

    def __post_init__(self):
        if not self.moves:
            raise ValueError(f"Robot {self.robot}: a path needs at least one move")
        if self.moves[0].enter != 0:
            raise ValueError(f"Robot {self.robot}: path must start at step 0")
        for a, b in zip(self.moves, self.moves[1:]):
            if a.exit != b.enter or a.target != b.origin:
                raise ValueError(f"Robot {self.robot}: moves are not contiguous")

    @property
    def start(self) -> int:
        return self.moves[0].origin

    @property
    def goal(self) -> int:
        return self.moves[-1].target

    @property
    def end_step(self) -> int:
        return self.moves[-1].exit

    @property
    def traverses(self) -> List[Move]:
        return [m for m in self.moves if m.is_traverse]


@dataclass
class MapfSolution:
    paths: Dict[int, TimedSkeletonPath]
    expansions: int = 0

    @property
    def makespan(self) -> int:
        return max((p.end_step for p in self.paths.values()), default=0)

    def to_dict(self) -> List[dict]:
        return [
            {
                "robot": robot,
                "moves": [
                    {"kind": m.kind, "locus": m.locus, "enter": m.enter, "exit": m.exit,
                     "direction": m.direction}
                    for m in self.paths[robot].moves
                ],
            }
            for robot in sorted(self.paths)
        ]


@dataclass(frozen=True)
class CbsConstraint:
    """
    Keeps `robot` off a locus.

    Vertex intervals are closed sets of steps. Edge intervals are time spans: a
    traversal over [enter, exit] violates [a, b] iff enter < b and a < exit.
    """
    robot: int
    kind: str
    locus: int
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"Constraint interval [{self.start}, {self.end}] is empty")
        if self.kind not in (EDGE, VERTEX):
            raise ValueError(f"Unknown constraint kind {self.kind!r}")


@dataclass(frozen=True)
class EdgeGroupProhibition:
    edge: int
    robots: FrozenSet[int]

    def __post_init__(self):
        if not self.robots:
            raise ValueError("Prohibited robot set must be non-empty")

    def describe(self) -> str:
        return f"edge {self.edge} robots {sorted(self.robots)}"


@dataclass(frozen=True)
class VertexGroupProhibition:
    """Robots crossing `vertex` together with the given incoming/outgoing edges (None = no edge)."""
    vertex: int
    incoming: Tuple[Tuple[int, Optional[int]], ...]
    outgoing: Tuple[Tuple[int, Optional[int]], ...]

    def __post_init__(self):
        if not self.incoming:
            raise ValueError("Prohibited robot set must be non-empty")

    @property
    def robots(self) -> FrozenSet[int]:
        return frozenset(r for r, _ in self.incoming)

    def describe(self) -> str:
        return f"vertex {self.vertex} in {dict(self.incoming)} out {dict(self.outgoing)}"


@dataclass(frozen=True)
class JointProhibition:
    """Groupings that must not all occur in one solution."""
    parts: Tuple[Union[EdgeGroupProhibition, VertexGroupProhibition], ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("Joint prohibition needs at least one part")

    @property
    def robots(self) -> FrozenSet[int]:
        return frozenset().union(*(p.robots for p in self.parts))

    def describe(self) -> str:
        return " & ".join(p.describe() for p in self.parts)


ProhibitionConstraint = Union[EdgeGroupProhibition, VertexGroupProhibition, JointProhibition]


@dataclass(frozen=True)
class EdgeGroup:
    """Overlap-closed set of traversals of one edge."""
    edge: int
    members: Tuple[Tuple[int, int], ...]   # (robot, move index)
    start: int
    end: int

    @property
    def robots(self) -> FrozenSet[int]:
        return frozenset(r for r, _ in self.members)


@dataclass(frozen=True)
class VertexEvent:
    """Robots handing over from one move to the next at the same vertex and step."""
    vertex: int
    step: int
    incoming: Tuple[Tuple[int, Optional[int]], ...]
    outgoing: Tuple[Tuple[int, Optional[int]], ...]
    handoffs: Tuple[Tuple[int, int], ...]  # (robot, index of the move being left)

    @property
    def robots(self) -> FrozenSet[int]:
        return frozenset(r for r, _ in self.incoming)


@dataclass(frozen=True)
class CapacityConflict:
    kind: str
    locus: int
    step: int
    robots: Tuple[int, ...]

    def constraint_for(self, robot: int) -> CbsConstraint:
        end = self.step if self.kind == VERTEX else self.step + 1
        return CbsConstraint(robot=robot, kind=self.kind, locus=self.locus, start=self.step, end=end)


@dataclass(frozen=True)
class ProhibitionViolation:
    prohibition: ProhibitionConstraint
    branches: Tuple[CbsConstraint, ...]


# ============================================================
# Shared decompositions
# ============================================================

def compute_edge_steps(sk: WorkspaceSkeleton, v_ref: float, step_duration: float) -> Dict[int, int]:
    """Traversal time of every edge in search steps."""
    if v_ref <= 0 or step_duration <= 0:
        raise ValueError("v_ref and step_duration must be positive")
    return {
        eid: max(1, math.ceil(e.length / (v_ref * step_duration) - 1e-9))
        for eid, e in sk.edges.items()
    }


def edge_groups(sol: MapfSolution) -> List[EdgeGroup]:
    """
    Group overlapping traversals of the same edge.

    Traversals are swept in order of entry; each joins the first open group it
    shares a step with, so every group has a step at which all its members are
    on the edge. An overlap chain whose ends never meet (A meets B, B meets C,
    A leaves before C enters) splits where A leaves. A robot never appears
    twice in one group.
    """
    by_edge: Dict[int, List[Tuple[int, int, int, int]]] = defaultdict(list)
    for robot in sorted(sol.paths):
        for index, m in enumerate(sol.paths[robot].moves):
            if m.is_traverse:
                by_edge[m.locus].append((m.enter, robot, index, m.exit))

    groups = []
    for edge in sorted(by_edge):
        # each open group: [members, robots, first enter, earliest exit, last exit]
        open_groups: List[list] = []
        for enter, robot, index, exit_ in sorted(by_edge[edge]):
            for g in open_groups:
                if robot not in g[1] and enter < g[3]:
                    g[0].append((robot, index))
                    g[1].add(robot)
                    g[3] = min(g[3], exit_)
                    g[4] = max(g[4], exit_)
                    break
            else:
                open_groups.append([[(robot, index)], {robot}, enter, exit_, exit_])
        for members, _, start, _, end in open_groups:
            groups.append(EdgeGroup(edge=edge, members=tuple(sorted(members)), start=start, end=end))
    groups.sort(key=lambda g: (g.start, g.edge, min(g.robots)))
    return groups


def vertex_events(sol: MapfSolution) -> List[VertexEvent]:
    """
    Hand-offs between consecutive moves, grouped by (vertex, step).

    The incoming edge of a hand-off is the last edge the robot traversed (carried
    through waits); the outgoing edge is the next move's edge, or None for a wait.
    """
    grouped: Dict[Tuple[int, int], List[Tuple[int, Optional[int], Optional[int], int]]] = defaultdict(list)
    for robot in sorted(sol.paths):
        moves = sol.paths[robot].moves
        last_edge: Optional[int] = None
        for index in range(len(moves) - 1):
            current, following = moves[index], moves[index + 1]
            if current.is_traverse:
                last_edge = current.locus
            out_edge = following.locus if following.is_traverse else None
            grouped[(current.target, current.exit)].append((robot, last_edge, out_edge, index))

    events = []
    for (vertex, step), items in sorted(grouped.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        items.sort()
        events.append(VertexEvent(
            vertex=vertex,
            step=step,
            incoming=tuple((r, i) for r, i, _, _ in items),
            outgoing=tuple((r, o) for r, _, o, _ in items),
            handoffs=tuple((r, idx) for r, _, _, idx in items),
        ))
    return events


# ============================================================
# Low level
# ============================================================

def _blocked(intervals: Iterable[Tuple[int, int]], t: int) -> bool:
    return any(a <= t <= b for a, b in intervals)


def _edge_blocked(intervals: Iterable[Tuple[int, int]], enter: int, exit_: int) -> bool:
    return any(enter < b and a < exit_ for a, b in intervals)


def _distances_to_goal(sk: WorkspaceSkeleton, caps: CapacityAnnotation, edge_steps: Dict[int, int],
                       goal: int) -> Dict[int, int]:
    g = nx.Graph()
    g.add_nodes_from(v for v in sk.vertices if caps.vertex_usable(v))
    for eid in sorted(sk.edges):
        e = sk.edges[eid]
        if not (caps.edge_usable(eid) and caps.vertex_usable(e.u) and caps.vertex_usable(e.v)):
            continue
        w = edge_steps[eid]
        if g.has_edge(e.u, e.v):
            w = min(w, g[e.u][e.v]["steps"])
        g.add_edge(e.u, e.v, steps=w)
    if goal not in g:
        return {}
    return nx.single_source_dijkstra_path_length(g, goal, weight="steps")


def low_level(sk: WorkspaceSkeleton, caps: CapacityAnnotation, robot: int, query: SkeletonQuery,
              cbs_constraints: Sequence[CbsConstraint], edge_steps: Optional[Dict[int, int]] = None,
              horizon: Optional[int] = None) -> TimedSkeletonPath:
    """
    Minimum-makespan path for one robot by A* over the time-expanded skeleton.

    Args:
        sk, caps: Skeleton and its capacities (capacity 0 loci are never used)
        robot: Robot id the constraints are filtered by
        query: Start/goal vertices
        cbs_constraints: Constraints of the current tree node (any robot)
        edge_steps: Traversal steps per edge (default: one step per meter)
        horizon: Last step considered (default: derived from the graph and constraints)

    Raises:
        LowLevelFailure: goal unreachable within the horizon
    """
    if edge_steps is None:
        edge_steps = compute_edge_steps(sk, 1.0, 1.0)
    start, goal = query.start, query.goal
    if not (caps.vertex_usable(start) and caps.vertex_usable(goal)):
        raise LowLevelFailure(f"Robot {robot}: start or goal vertex has no capacity")

    vertex_blocks: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
    edge_blocks: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
    for c in cbs_constraints:
        if c.robot != robot:
            continue
        (vertex_blocks if c.kind == VERTEX else edge_blocks)[c.locus].append((c.start, c.end))

    h = _distances_to_goal(sk, caps, edge_steps, goal)
    if start not in h:
        raise LowLevelFailure(f"Robot {robot}: goal {goal} unreachable from {start}")
    if _blocked(vertex_blocks[start], 0):
        raise LowLevelFailure(f"Robot {robot}: start vertex constrained at step 0")

    last_goal_block = max((b for _, b in vertex_blocks[goal]), default=-1)
    if horizon is None:
        latest = max((c.end for c in cbs_constraints if c.robot == robot), default=0)
        usable_steps = sum(s for eid, s in edge_steps.items() if caps.edge_usable(eid))
        horizon = latest + usable_steps + len(sk.vertices) + 1

    neighbors: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
    for eid in sorted(sk.edges):
        e = sk.edges[eid]
        if caps.edge_usable(eid) and caps.vertex_usable(e.u) and caps.vertex_usable(e.v):
            neighbors[e.u].append((eid, e.v))
            neighbors[e.v].append((eid, e.u))

    open_heap = [(h[start], 0, start)]
    parents: Dict[Tuple[int, int], Tuple[Optional[Tuple[int, int]], Optional[int]]] = {(start, 0): (None, None)}
    closed = set()
    while open_heap:
        _, t, v = heapq.heappop(open_heap)
        if (v, t) in closed:
            continue
        closed.add((v, t))
        if v == goal and t > last_goal_block:
            return _reconstruct(sk, robot, parents, (v, t))
        if t >= horizon:
            continue
        successors = []
        if not _blocked(vertex_blocks[v], t + 1):
            successors.append((v, t + 1, None))
        for eid, w in neighbors[v]:
            arrive = t + edge_steps[eid]
            if _edge_blocked(edge_blocks[eid], t, arrive) or _blocked(vertex_blocks[w], arrive):
                continue
            successors.append((w, arrive, eid))
        for w, arrive, eid in successors:
            if (w, arrive) in parents or w not in h:
                continue
            parents[(w, arrive)] = ((v, t), eid)
            heapq.heappush(open_heap, (arrive + h[w], arrive, w))
    raise LowLevelFailure(f"Robot {robot}: no path to {goal} within horizon {horizon}")


def _reconstruct(sk: WorkspaceSkeleton, robot: int, parents, state: Tuple[int, int]) -> TimedSkeletonPath:
    steps = []
    while True:
        prev, eid = parents[state]
        if prev is None:
            break
        steps.append((prev, state, eid))
        state = prev
    steps.reverse()

    moves: List[Move] = []
    for (v, t), (w, t2), eid in steps:
        if eid is None:
            if moves and not moves[-1].is_traverse:
                last = moves[-1]
                moves[-1] = Move(WAIT, v, last.enter, t2, v, v)
            else:
                moves.append(Move(WAIT, v, t, t2, v, v))
        else:
            moves.append(Move(TRAVERSE, eid, t, t2, v, w, sk.edges[eid].direction_from(v)))
    if not moves:
        v, t = state
        moves.append(Move(WAIT, v, 0, 0, v, v))
    return TimedSkeletonPath(robot=robot, moves=tuple(moves))


# ============================================================
# Conflicts and prohibitions
# ============================================================

def detect_capacity_conflict(sk: WorkspaceSkeleton, caps: CapacityAnnotation,
                             sol: MapfSolution) -> Optional[CapacityConflict]:
    """
    Earliest locus whose occupancy exceeds its capacity.

    Vertices are occupied at instants (robots finished early stay on their goal);
    edges during slots [s, s+1). Ordered by step, then locus id, vertices first.
    """
    makespan = sol.makespan
    vertex_occ: Dict[Tuple[int, int], set] = defaultdict(set)
    edge_occ: Dict[Tuple[int, int], set] = defaultdict(set)
    for robot, path in sol.paths.items():
        for m in path.moves:
            if m.is_traverse:
                vertex_occ[(m.enter, m.origin)].add(robot)
                vertex_occ[(m.exit, m.target)].add(robot)
                for s in range(m.enter, m.exit):
                    edge_occ[(s, m.locus)].add(robot)
            else:
                for s in range(m.enter, m.exit + 1):
                    vertex_occ[(s, m.locus)].add(robot)
        for s in range(path.end_step, makespan + 1):
            vertex_occ[(s, path.goal)].add(robot)

    candidates = []
    for (s, v), robots in vertex_occ.items():
        if len(robots) > caps.vertex_capacity.get(v, 0):
            candidates.append((s, v, 0, VERTEX, robots))
    for (s, e), robots in edge_occ.items():
        if len(robots) > caps.edge_capacity.get(e, 0):
            candidates.append((s, e, 1, EDGE, robots))
    if not candidates:
        return None
    s, locus, _, kind, robots = min(candidates, key=lambda c: c[:3])
    return CapacityConflict(kind=kind, locus=locus, step=s, robots=tuple(sorted(robots)))


def _match_edge(p: EdgeGroupProhibition, groups: List[EdgeGroup], match: str) -> Optional[List[CbsConstraint]]:
    for g in groups:
        if g.edge != p.edge:
            continue
        if g.robots == p.robots or (match == "subset" and p.robots <= g.robots):
            return [CbsConstraint(r, EDGE, g.edge, g.start, g.end) for r in sorted(p.robots)]
    return None


def _match_vertex(p: VertexGroupProhibition, events: List[VertexEvent],
                  match: str) -> Optional[List[CbsConstraint]]:
    wanted_in, wanted_out = dict(p.incoming), dict(p.outgoing)
    for ev in events:
        if ev.vertex != p.vertex:
            continue
        have_in, have_out = dict(ev.incoming), dict(ev.outgoing)
        if match == "subset":
            ok = all(r in have_in and have_in[r] == wanted_in[r] and have_out.get(r) == wanted_out.get(r)
                     for r in wanted_in)
        else:
            ok = have_in == wanted_in and have_out == wanted_out
        if ok:
            return [CbsConstraint(r, VERTEX, ev.vertex, ev.step, ev.step) for r in sorted(wanted_in)]
    return None


def _match(p: ProhibitionConstraint, groups, events, match: str) -> Optional[List[CbsConstraint]]:
    if isinstance(p, EdgeGroupProhibition):
        return _match_edge(p, groups, match)
    if isinstance(p, VertexGroupProhibition):
        return _match_vertex(p, events, match)
    branches: List[CbsConstraint] = []
    for part in p.parts:
        found = _match(part, groups, events, match)
        if found is None:
            return None
        branches.extend(c for c in found if c not in branches)
    return branches


def check_prohibitions(sol: MapfSolution, prohibitions: Sequence[ProhibitionConstraint],
                       match: str = "exact") -> Optional[ProhibitionViolation]:
    """First prohibition whose grouping occurs in the solution, with the constraints to branch on."""
    if not prohibitions:
        return None
    groups = edge_groups(sol)
    events = vertex_events(sol)
    for p in prohibitions:
        branches = _match(p, groups, events, match)
        if branches is not None:
            return ProhibitionViolation(prohibition=p, branches=tuple(branches))
    return None


# ============================================================
# High level
# ============================================================

@dataclass(order=True)
class _CTNode:
    makespan: int
    total_steps: int
    seq: int
    constraints: Tuple[CbsConstraint, ...] = field(compare=False)
    paths: Dict[int, TimedSkeletonPath] = field(compare=False)


def _node(paths: Dict[int, TimedSkeletonPath], constraints: Tuple[CbsConstraint, ...], seq: int) -> _CTNode:
    ends = [p.end_step for p in paths.values()]
    return _CTNode(max(ends, default=0), sum(ends), seq, constraints, paths)


def cbs(sk: WorkspaceSkeleton, caps: CapacityAnnotation, queries: Sequence[SkeletonQuery],
        prohibitions: Sequence[ProhibitionConstraint] = (), edge_steps: Optional[Dict[int, int]] = None,
        node_budget: Optional[int] = None, match: str = "exact",
        horizon: Optional[int] = None) -> MapfSolution:
    """
    Best-first search over constraint-tree nodes ordered by makespan.

    Returns:
        The first capacity- and prohibition-feasible MapfSolution

    Raises:
        MapfSearchError: a root path does not exist, the tree is exhausted, or the
            node budget runs out
    """
    if edge_steps is None:
        edge_steps = compute_edge_steps(sk, 1.0, 1.0)
    if node_budget is None:
        node_budget = config.CBS_NODE_BUDGET
    by_robot = {q.robot: q for q in queries}

    root_paths = {}
    for robot in sorted(by_robot):
        try:
            root_paths[robot] = low_level(sk, caps, robot, by_robot[robot], (), edge_steps, horizon)
        except LowLevelFailure as e:
            raise MapfSearchError(f"No root path: {e}") from e

    seq = itertools.count()
    open_list = [_node(root_paths, (), next(seq))]
    expansions = 0
    while open_list:
        node = heapq.heappop(open_list)
        expansions += 1
        if expansions > node_budget:
            raise MapfSearchError(f"CBS node budget of {node_budget} expansions exhausted")
        sol = MapfSolution(paths=node.paths, expansions=expansions)

        conflict = detect_capacity_conflict(sk, caps, sol)
        if conflict is not None:
            branches = [conflict.constraint_for(r) for r in conflict.robots]
            logger.debug(f"Capacity conflict on {conflict.kind} {conflict.locus} at step {conflict.step}: "
                         f"robots {conflict.robots}")
        else:
            violation = check_prohibitions(sol, prohibitions, match)
            if violation is None:
                logger.info(f"CBS solved {len(by_robot)} robots: makespan {sol.makespan}, "
                            f"{expansions} expansions")
                return sol
            branches = list(violation.branches)
            logger.debug(f"Prohibition violated: {violation.prohibition.describe()}")

        existing = set(node.constraints)
        for constraint in branches:
            if constraint in existing:
                continue
            constraints = node.constraints + (constraint,)
            try:
                path = low_level(sk, caps, constraint.robot, by_robot[constraint.robot],
                                 constraints, edge_steps, horizon)
            except LowLevelFailure:
                continue
            paths = dict(node.paths)
            paths[constraint.robot] = path
            heapq.heappush(open_list, _node(paths, constraints, next(seq)))

    raise MapfSearchError(f"Constraint tree exhausted after {expansions} expansions")
