import numpy as np

from skeleton_mapf import TRAVERSE as MOVE_TRAVERSE
from skeleton_mapf import WAIT, MapfSolution, Move, TimedSkeletonPath
from task_hypergraph import (
    COMPOSITION,
    DECOUPLED,
    ELEMENT,
    HYPERARC,
    IDLE,
    TRANSITION_SEGMENT,
    TRANSITION_VERTEX,
    TRAVERSE,
    OrderedItem,
    build_tsh,
    order_by_dependency,
    project_traverses,
    to_dot,
)

RED, GREEN, BLUE, YELLOW = 0, 1, 2, 3

# 4-cycle used by the random solutions: edge i joins vertex i and i+1 (mod 4)
RING = {i: (i, (i + 1) % 4) for i in range(4)}


def go(edge, enter, exit_, origin, target, direction=1):
    return Move(MOVE_TRAVERSE, edge, enter, exit_, origin, target, direction)


def mapf(paths):
    return MapfSolution(paths={r: TimedSkeletonPath(r, tuple(moves)) for r, moves in paths.items()})


def kinds(tsh):
    elements = [el.kind for el in tsh.elements.values()]
    arcs = [arc.kind for arc in tsh.hyperarcs.values()]
    return elements, arcs


def random_solution(rng, robots=3, moves=4):
    """Random walks on the ring; waits are always followed by a traverse."""
    paths = {}
    for robot in range(robots):
        v, t, out = int(rng.integers(4)), 0, []
        while len(out) < moves:
            if out and out[-1].kind == WAIT or rng.random() < 0.7:
                eid = int(rng.choice([e for e, (a, b) in RING.items() if v in (a, b)]))
                a, b = RING[eid]
                w = b if v == a else a
                d = int(rng.integers(1, 4))
                out.append(go(eid, t, t + d, v, w, 1 if v == a else -1))
                v = w
            else:
                d = int(rng.integers(1, 3))
                out.append(Move(WAIT, v, t, t + d, v, v))
            t = out[-1].exit
        paths[robot] = out
    return mapf(paths)


def test_single_robot_two_edges():
    tsh = build_tsh(mapf({0: [go(0, 0, 1, 0, 1), go(1, 1, 2, 1, 2)]}))
    elements, arcs = kinds(tsh)
    assert elements == [TRAVERSE, TRAVERSE]
    assert arcs == [TRANSITION_SEGMENT]
    arc = tsh.hyperarcs[0]
    assert (arc.tail, arc.head, arc.vertex, arc.step) == ((0,), (1,), 1, 1)
    assert arc.crossing == (0,)


def test_four_robot_split_and_join():
    sol = mapf({
        RED: [go(0, 0, 2, 0, 1), go(1, 2, 4, 1, 2)],
        GREEN: [go(0, 0, 2, 1, 0, -1)],
        BLUE: [go(3, 0, 2, 3, 1), go(4, 2, 4, 1, 4)],
        YELLOW: [go(1, 0, 4, 2, 1, -1)],
    })
    tsh = build_tsh(sol)
    elements, arcs = kinds(tsh)
    assert elements.count(TRAVERSE) == 4
    assert elements.count(DECOUPLED) == 4
    assert arcs.count(COMPOSITION) == 2
    assert arcs.count(TRANSITION_VERTEX) == 1
    assert len(arcs) == 3

    groups = {tsh.elements[i].edge: tsh.elements[i].group for i in range(4)}
    assert groups == {0: (RED, GREEN), 1: (RED, YELLOW), 3: (BLUE,), 4: (BLUE,)}

    transition = next(a for a in tsh.hyperarcs.values() if a.kind == TRANSITION_VERTEX)
    assert (transition.vertex, transition.step) == (1, 2)
    assert sorted(transition.crossing) == [RED, BLUE]
    assert tsh.robots_of(transition.tail) == {RED, BLUE}
    assert tsh.robots_of(tsh.sources) == {RED, GREEN, BLUE, YELLOW}
    assert tsh.robots_of(tsh.sinks) == {RED, GREEN, BLUE, YELLOW}


def test_disjoint_robots_give_independent_chains():
    sol = mapf({
        0: [go(0, 0, 1, 0, 1), go(1, 1, 2, 1, 2)],
        1: [go(5, 0, 2, 7, 8), go(6, 2, 3, 8, 9)],
    })
    tsh = build_tsh(sol)
    _, arcs = kinds(tsh)
    assert arcs == [TRANSITION_SEGMENT, TRANSITION_SEGMENT]
    for arc in tsh.hyperarcs.values():
        assert len(tsh.robots_of(arc.tail)) == 1
    assert tsh.robot_elements == {0: (0, 2), 1: (1, 3)}


def test_diamond_orders_join_before_split():
    sol = mapf({
        0: [go(0, 0, 1, 0, 2), go(2, 1, 3, 2, 3), go(3, 3, 4, 3, 4)],
        1: [go(1, 0, 1, 1, 2), go(2, 1, 3, 2, 3), go(4, 3, 4, 3, 5)],
    })
    tsh = build_tsh(sol)
    assert tsh.elements[2].group == (0, 1)
    assert [a.kind for a in tsh.hyperarcs.values()] == [TRANSITION_VERTEX, TRANSITION_VERTEX]
    assert order_by_dependency(tsh) == [
        OrderedItem(ELEMENT, 0),
        OrderedItem(ELEMENT, 1),
        OrderedItem(HYPERARC, 0),
        OrderedItem(ELEMENT, 2),
        OrderedItem(HYPERARC, 1),
        OrderedItem(ELEMENT, 3),
        OrderedItem(ELEMENT, 4),
    ]


def test_idle_moves_become_elements():
    sol = mapf({0: [Move(WAIT, 0, 0, 2, 0, 0), go(0, 2, 3, 0, 1)]})
    tsh = build_tsh(sol)
    assert [el.kind for el in tsh.elements.values()] == [IDLE, TRAVERSE]
    assert tsh.elements[0].vertex == 0
    assert tsh.hyperarcs[0].crossing == ()


def test_random_solutions_are_lossless():
    rng = np.random.default_rng(11)
    for _ in range(100):
        sol = random_solution(rng)
        tsh = build_tsh(sol)
        expected = sorted(
            (robot, m.locus, m.direction, m.enter, m.exit)
            for robot, path in sol.paths.items()
            for m in path.traverses
        )
        assert project_traverses(tsh) == expected
        assert tsh.robots_of(tsh.sources) == set(sol.paths)
        order = order_by_dependency(tsh)
        planned = [i.id for i in order if i.kind == ELEMENT]
        assert sorted(planned) == sorted(e for e, el in tsh.elements.items() if el.kind != DECOUPLED)


def test_dot_lists_every_element():
    tsh = build_tsh(mapf({0: [go(0, 0, 1, 0, 1), go(1, 1, 2, 1, 2)]}))
    dot = to_dot(tsh)
    assert dot.startswith("digraph tsh {")
    assert "e0 -> h0;" in dot and "h0 -> e1;" in dot
