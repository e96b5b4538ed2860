"""
Task-space hypergraph built from a skeleton MAPF solution.

Robots traversing the same edge with overlapping intervals form one element;
waits are singleton idle elements. Hyperarcs connect elements where robots
hand over at a vertex (transitions) or where a group splits or joins
(compositions, through zero-length decoupled elements).
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import networkx as nx

from skeleton_mapf import MapfSolution, edge_groups, vertex_events

logger = logging.getLogger(__name__)

# Element kinds
TRAVERSE = "traverse"
IDLE = "idle"
DECOUPLED = "decoupled"

# Hyperarc kinds
COMPOSITION = "composition"
TRANSITION_VERTEX = "transition-vertex"
TRANSITION_SEGMENT = "transition-segment"

ELEMENT = "element"
HYPERARC = "hyperarc"

_SINK = ("sink",)
_SOURCE = ("source",)


class StructuralError(RuntimeError):
    """The solution or hypergraph violates a structural invariant."""


@dataclass(frozen=True)
class EdgeAssignment:
    edge: int
    direction: int
    enter: int
    exit: int


@dataclass(frozen=True)
class TaskSpaceElement:
    id: int
    kind: str
    group: Tuple[int, ...]
    interval: Tuple[int, int]
    assignment: Optional[Tuple[Tuple[int, EdgeAssignment], ...]] = None
    vertex: Optional[int] = None

    @property
    def edge(self) -> Optional[int]:
        if not self.assignment:
            return None
        return self.assignment[0][1].edge

    def assignment_of(self, robot: int) -> EdgeAssignment:
        for r, a in self.assignment or ():
            if r == robot:
                return a
        raise KeyError(f"Robot {robot} has no assignment in element {self.id}")

    def label(self) -> str:
        robots = ",".join(str(r) for r in self.group)
        if self.kind == TRAVERSE:
            return f"e{self.id} edge {self.edge} {{{robots}}} [{self.interval[0]},{self.interval[1]}]"
        return f"e{self.id} {self.kind}@v{self.vertex} {{{robots}}} [{self.interval[0]},{self.interval[1]}]"


@dataclass(frozen=True)
class Hyperarc:
    """
    Directed hyperarc between element sets.

    Transitions record the vertex, the step, each robot's incoming/outgoing edge
    (None when waiting) and the per-robot hand-offs (robot, from element, to element).
    """
    id: int
    kind: str
    tail: Tuple[int, ...]
    head: Tuple[int, ...]
    step: int
    vertex: Optional[int] = None
    incoming: Tuple[Tuple[int, Optional[int]], ...] = ()
    outgoing: Tuple[Tuple[int, Optional[int]], ...] = ()
    handoffs: Tuple[Tuple[int, int, int], ...] = ()

    @property
    def is_transition(self) -> bool:
        return self.kind != COMPOSITION

    @property
    def crossing(self) -> Tuple[int, ...]:
        """Robots that physically move from one edge onto another here."""
        out = dict(self.outgoing)
        return tuple(r for r, e in self.incoming if e is not None and out.get(r) is not None)


@dataclass
class TaskSpaceHypergraph:
    elements: Dict[int, TaskSpaceElement]
    hyperarcs: Dict[int, Hyperarc]
    sources: Tuple[int, ...]
    sinks: Tuple[int, ...]
    # Non-decoupled elements of each robot in time order
    robot_elements: Dict[int, Tuple[int, ...]] = field(default_factory=dict)

    def robots_of(self, element_ids) -> set:
        robots = set()
        for eid in element_ids:
            robots.update(self.elements[eid].group)
        return robots


@dataclass(frozen=True)
class OrderedItem:
    kind: str   # ELEMENT or HYPERARC
    id: int


def build_tsh(sol: MapfSolution) -> TaskSpaceHypergraph:
    """
    Decompose a MAPF solution into elements and hyperarcs.

    Raises:
        StructuralError: the solution is malformed
    """
    for robot, path in sol.paths.items():
        if path.robot != robot:
            raise StructuralError(f"Path stored under robot {robot} belongs to robot {path.robot}")

    # (1) traverse elements and (2) idle elements, keyed by (robot, move index)
    specs = []
    for g in edge_groups(sol):
        assignment = []
        for robot, index in g.members:
            m = sol.paths[robot].moves[index]
            assignment.append((robot, EdgeAssignment(m.locus, m.direction, m.enter, m.exit)))
        specs.append(((g.start, 0, min(g.robots), g.edge), TRAVERSE, g, tuple(assignment)))
    for robot in sorted(sol.paths):
        for index, m in enumerate(sol.paths[robot].moves):
            if not m.is_traverse:
                specs.append(((m.enter, 1, robot, m.locus), IDLE, (robot, index, m), None))
    specs.sort(key=lambda s: s[0])

    elements: Dict[int, TaskSpaceElement] = {}
    element_of: Dict[Tuple[int, int], int] = {}
    for eid, (_, kind, payload, assignment) in enumerate(specs):
        if kind == TRAVERSE:
            g = payload
            elements[eid] = TaskSpaceElement(eid, TRAVERSE, tuple(sorted(g.robots)), (g.start, g.end), assignment)
            for member in g.members:
                element_of[member] = eid
        else:
            robot, index, m = payload
            elements[eid] = TaskSpaceElement(eid, IDLE, (robot,), (m.enter, m.exit), None, m.locus)
            element_of[(robot, index)] = eid

    robot_elements = {
        robot: tuple(element_of[(robot, i)] for i in range(len(sol.paths[robot].moves)))
        for robot in sorted(sol.paths)
    }

    # Hand-off classes: where each robot of an element goes next / came from
    events = vertex_events(sol)
    out_class: Dict[Tuple[int, int], tuple] = {}
    in_class: Dict[Tuple[int, int], tuple] = {}
    event_handoffs = []
    for ev in events:
        key = (ev.vertex, ev.step)
        handoffs = []
        for robot, index in ev.handoffs:
            src = element_of[(robot, index)]
            dst = element_of[(robot, index + 1)]
            out_class[(src, robot)] = key
            in_class[(dst, robot)] = key
            handoffs.append((robot, src, dst))
        event_handoffs.append((ev, tuple(handoffs)))

    next_id = len(elements)
    out_item: Dict[Tuple[int, int], int] = {}
    in_item: Dict[Tuple[int, int], int] = {}
    staged_arcs = []

    for eid in sorted(elements):
        el = elements[eid]
        classes: Dict[tuple, List[int]] = defaultdict(list)
        for robot in el.group:
            classes[out_class.get((eid, robot), _SINK)].append(robot)
        if len(classes) == 1:
            for robot in el.group:
                out_item[(eid, robot)] = eid
        else:
            dots = []
            for key in sorted(classes, key=lambda k: (k == _SINK, k)):
                step = el.interval[1] if key == _SINK else key[1]
                vertex = el.vertex if key == _SINK else key[0]
                elements[next_id] = TaskSpaceElement(next_id, DECOUPLED, tuple(classes[key]), (step, step),
                                                     None, vertex)
                for robot in classes[key]:
                    out_item[(eid, robot)] = next_id
                dots.append(next_id)
                next_id += 1
            step = min(elements[d].interval[0] for d in dots)
            staged_arcs.append(((step, 0, eid), COMPOSITION, (eid,), tuple(dots), step, None, (), (), ()))

        classes = defaultdict(list)
        for robot in el.group:
            classes[in_class.get((eid, robot), _SOURCE)].append(robot)
        if len(classes) == 1:
            for robot in el.group:
                in_item[(eid, robot)] = eid
        else:
            dots = []
            for key in sorted(classes, key=lambda k: (k != _SOURCE, k)):
                step = el.interval[0] if key == _SOURCE else key[1]
                vertex = el.vertex if key == _SOURCE else key[0]
                elements[next_id] = TaskSpaceElement(next_id, DECOUPLED, tuple(classes[key]), (step, step),
                                                     None, vertex)
                for robot in classes[key]:
                    in_item[(eid, robot)] = next_id
                dots.append(next_id)
                next_id += 1
            staged_arcs.append(((el.interval[0], 2, eid), COMPOSITION, tuple(dots), (eid,), el.interval[0],
                                None, (), (), ()))

    for ev, handoffs in event_handoffs:
        tail = tuple(sorted({out_item[(src, robot)] for robot, src, _ in handoffs}))
        head = tuple(sorted({in_item[(dst, robot)] for robot, _, dst in handoffs}))
        robots = ev.robots
        same_group = (
            len(tail) == 1 and len(head) == 1
            and set(elements[tail[0]].group) == robots == set(elements[head[0]].group)
        )
        kind = TRANSITION_SEGMENT if len(robots) == 1 or same_group else TRANSITION_VERTEX
        staged_arcs.append(((ev.step, 1, ev.vertex), kind, tail, head, ev.step, ev.vertex,
                            ev.incoming, ev.outgoing, handoffs))

    staged_arcs.sort(key=lambda a: a[0])
    hyperarcs: Dict[int, Hyperarc] = {}
    for hid, (_, kind, tail, head, step, vertex, incoming, outgoing, handoffs) in enumerate(staged_arcs):
        arc = Hyperarc(hid, kind, tail, head, step, vertex, incoming, outgoing, handoffs)
        tail_robots = set().union(*(elements[e].group for e in tail))
        head_robots = set().union(*(elements[e].group for e in head))
        if not tail or not head or tail_robots != head_robots:
            raise StructuralError(f"Hyperarc {hid} ({kind}) does not conserve robots")
        hyperarcs[hid] = arc

    in_head = {e for a in hyperarcs.values() for e in a.head}
    in_tail = {e for a in hyperarcs.values() for e in a.tail}
    tsh = TaskSpaceHypergraph(
        elements=elements,
        hyperarcs=hyperarcs,
        sources=tuple(e for e in sorted(elements) if e not in in_head),
        sinks=tuple(e for e in sorted(elements) if e not in in_tail),
        robot_elements=robot_elements,
    )
    logger.debug(f"TSH: {len(elements)} elements, {len(hyperarcs)} hyperarcs")
    return tsh


def project_traverses(tsh: TaskSpaceHypergraph) -> List[Tuple[int, int, int, int, int]]:
    """(robot, edge, direction, enter, exit) for every traverse assignment, sorted."""
    out = []
    for el in tsh.elements.values():
        if el.kind != TRAVERSE:
            continue
        for robot, a in el.assignment:
            out.append((robot, a.edge, a.direction, a.enter, a.exit))
    return sorted(out)


def dependency_graph(tsh: TaskSpaceHypergraph) -> nx.DiGraph:
    g = nx.DiGraph()
    for eid, el in tsh.elements.items():
        g.add_node((ELEMENT, eid), key=(el.interval[0], 0, eid))
    for hid, arc in tsh.hyperarcs.items():
        g.add_node((HYPERARC, hid), key=(arc.step, 1, hid))
        for eid in arc.tail:
            g.add_edge((ELEMENT, eid), (HYPERARC, hid))
        for eid in arc.head:
            g.add_edge((HYPERARC, hid), (ELEMENT, eid))
    return g


def order_by_dependency(tsh: TaskSpaceHypergraph) -> List[OrderedItem]:
    """
    Topological order of planning items: traverse/idle elements and transition hyperarcs.

    Ties are broken by (interval start, lowest id).

    Raises:
        StructuralError: the dependency graph has a cycle
    """
    g = dependency_graph(tsh)
    keys = nx.get_node_attributes(g, "key")
    try:
        order = list(nx.lexicographical_topological_sort(g, key=lambda n: keys[n]))
    except nx.NetworkXUnfeasible as e:
        raise StructuralError("Task-space hypergraph has a dependency cycle") from e

    items = []
    for kind, ident in order:
        if kind == ELEMENT and tsh.elements[ident].kind == DECOUPLED:
            continue
        if kind == HYPERARC and not tsh.hyperarcs[ident].is_transition:
            continue
        items.append(OrderedItem(kind, ident))
    return items


def to_dot(tsh: TaskSpaceHypergraph) -> str:
    """DOT text: elements as boxes, hyperarcs as small labeled nodes with star edges."""
    lines = ["digraph tsh {", "  rankdir=LR;"]
    for eid in sorted(tsh.elements):
        el = tsh.elements[eid]
        style = ', style=dashed' if el.kind == DECOUPLED else ''
        lines.append(f'  e{eid} [shape=box, label="{el.label()}"{style}];')
    for hid in sorted(tsh.hyperarcs):
        arc = tsh.hyperarcs[hid]
        label = arc.kind if arc.vertex is None else f"{arc.kind} v{arc.vertex}"
        style = ', style=dashed' if arc.kind == COMPOSITION else ''
        lines.append(f'  h{hid} [shape=ellipse, fontsize=9, label="h{hid} {label} @{arc.step}"{style}];')
        for eid in arc.tail:
            lines.append(f"  e{eid} -> h{hid};")
        for eid in arc.head:
            lines.append(f"  h{hid} -> e{eid};")
    lines.append("}")
    return "\n".join(lines) + "\n"
