import numpy as np
import pytest

from conftest import disk, make_skeleton
from local_planners import (
    DynamicRegion,
    MotionTree,
    TargetRegion,
    composite_rrt,
    entry_offset,
    exit_offset,
    hold_path,
    kino_extend,
    region_rrt_edge,
    rrt_attach,
    rrt_transition,
)
from task_hypergraph import TRANSITION_VERTEX, TRAVERSE, EdgeAssignment, Hyperarc, TaskSpaceElement
from workspace import CarDynamics, CompositeConfiguration, Workspace, clearances, integrate


def car(robot_id=0):
    return disk(robot_id, radius=0.25, v_max=1.0, dynamics=CarDynamics(wheelbase=0.5, a_max=1.0, steer_max=0.6))


def corridor_element(robots=(0,)):
    assignment = tuple((r, EdgeAssignment(edge=0, direction=1, enter=0, exit=9)) for r in robots)
    return TaskSpaceElement(0, TRAVERSE, tuple(robots), (0, 9), assignment)


def corridor_skeleton():
    return make_skeleton({0: (0.5, 1.5), 1: (9.5, 1.5)}, [(0, 1)], clearance=0.5)


def step_lengths(path, i):
    xy = path.states[:, i, :2]
    return np.hypot(*np.diff(xy, axis=0).T)


def test_hold_path_repeats_configuration(make_context, empty_room):
    ctx = make_context(empty_room, [disk(0), disk(1)])
    path = hold_path(ctx, (0, 1), [(1, 1), (3, 3)], 5)
    assert path.states.shape == (6, 2, 2)
    assert path.duration == pytest.approx(0.5)
    assert path.final_configs() == {0: (1.0, 1.0), 1: (3.0, 3.0)}


def test_hold_path_for_car_stays_put(make_context, empty_room):
    ctx = make_context(empty_room, [car()])
    path = hold_path(ctx, (0,), [(2, 2, 0.3, 0.0)], 3)
    assert path.controls.shape == (3, 1, 2)
    assert np.allclose(path.states[-1, 0], (2, 2, 0.3, 0.0))


def test_mixed_group_is_rejected(make_context, empty_room):
    ctx = make_context(empty_room, [disk(0), car(1)])
    with pytest.raises(ValueError):
        ctx.is_kinodynamic((0, 1))


def test_region_advances_and_clamps(make_context, corridor):
    ctx = make_context(corridor, [disk(0)], sk=corridor_skeleton())
    region = DynamicRegion.for_element(ctx, corridor_element())
    assert region.centers[0] == pytest.approx([1.5, 1.5])
    assert region.radii[0] == pytest.approx(0.5)
    region.advance(np.array([100.0]))
    assert region.at_end
    assert region.centers[0] == pytest.approx([8.5, 1.5])


def test_edge_element_reaches_exit(make_context, corridor):
    ctx = make_context(corridor, [disk(0)], sk=corridor_skeleton(), seed=4)
    starts = CompositeConfiguration.from_mapping({0: (1.5, 1.5)})
    path = region_rrt_edge(ctx, corridor_element(), starts)

    assert np.allclose(path.states[0, 0], (1.5, 1.5))
    assert np.hypot(*(path.states[-1, 0] - (8.5, 1.5))) <= 0.5 + 1e-9
    assert (step_lengths(path, 0) <= 1.0 * path.dt + 1e-9).all()
    assert (clearances(corridor, path.states[:, 0]) >= 0.25).all()
    travelled = np.hypot(*(path.states[-1, 0] - path.states[0, 0]))
    assert path.duration >= travelled / 1.0 - 1e-9


def test_attach_connects_straight_when_free(make_context, empty_room):
    ctx = make_context(empty_room, [disk(0)])
    starts = CompositeConfiguration.from_mapping({0: (2.0, 2.0)})
    path = rrt_attach(ctx, starts, np.array([[6.0, 6.0]]), np.array([0.25]), "start")
    assert path.iterations == 1
    assert path.states[-1, 0] == pytest.approx([6.0, 6.0])
    assert (step_lengths(path, 0) <= 1.0 * path.dt + 1e-9).all()


def test_composite_rrt_rejects_cars(make_context, empty_room):
    ctx = make_context(empty_room, [car()])
    starts = CompositeConfiguration.from_mapping({0: (2.0, 2.0, 0.0, 0.0)})
    with pytest.raises(ValueError):
        composite_rrt(ctx, starts, np.array([[6.0, 6.0]]), np.array([0.25]), "baseline", 100)


def test_kino_extend_beats_coasting_and_replays(make_context, empty_room):
    robot = car()
    ctx = make_context(empty_room, [robot], seed=2)
    root = np.array([[5.0, 5.0, 0.0, 0.5]])
    tree = MotionTree(root)
    centers = np.array([[7.0, 6.0]])
    node = kino_extend(ctx, (0,), tree, TargetRegion(centers, np.array([0.5])))
    assert node == 1 and tree.parents[node] == 0

    coast = tuple(root[0])
    for _ in range(2):  # dt_min / dt steps
        coast = integrate(robot, coast, (0.0, 0.0), ctx.cfg.dt)
    coast_distance = np.hypot(coast[0] - 7.0, coast[1] - 6.0)
    assert np.hypot(*(tree.states[node][0, :2] - centers[0])) <= coast_distance + 1e-12

    seq, controls = tree.segments[node]
    state = tuple(root[0])
    for k in range(len(seq)):
        state = integrate(robot, state, tuple(controls[k, 0]), ctx.cfg.dt)
        assert np.allclose(state, seq[k, 0])
    assert np.allclose(seq[-1], tree.states[node])


@pytest.mark.slow
def test_car_attach_stops_inside_target(make_context, empty_room):
    robot = car()
    ctx = make_context(empty_room, [robot], seed=1)
    starts = CompositeConfiguration.from_mapping({0: (2.0, 5.0, 0.0, 0.0)})
    path = rrt_attach(ctx, starts, np.array([[4.0, 5.0]]), np.array([1.0]), "goal")

    final = path.states[-1, 0]
    assert abs(final[3]) <= 1e-9
    assert np.hypot(final[0] - 4.0, final[1] - 5.0) <= 1.0 + 1e-9
    state = tuple(path.states[0, 0])
    for k in range(path.steps):
        state = integrate(robot, state, tuple(path.controls[k, 0]), path.dt)
    assert np.allclose(state, final)


def two_lane_corridor():
    """Free band y in [1, 2.25]: room for two robots of radius 0.25 side by side."""
    return Workspace(
        bounds=(0.0, 0.0, 10.0, 3.25),
        obstacles=(
            ((0.0, 0.0), (10.0, 0.0), (10.0, 1.0), (0.0, 1.0)),
            ((0.0, 2.25), (10.0, 2.25), (10.0, 3.25), (0.0, 3.25)),
        ),
    )


def swap_element():
    assignment = (
        (0, EdgeAssignment(edge=0, direction=1, enter=0, exit=1)),
        (1, EdgeAssignment(edge=0, direction=-1, enter=1, exit=0)),
    )
    return TaskSpaceElement(0, TRAVERSE, (0, 1), (0, 9), assignment)


def swap_skeleton():
    return make_skeleton({0: (0.5, 1.625), 1: (9.5, 1.625)}, [(0, 1)], clearance=0.625)


def test_opposing_robots_get_lanes_on_each_side(make_context):
    ws = two_lane_corridor()
    ctx = make_context(ws, [disk(0), disk(1)], sk=swap_skeleton())
    region = DynamicRegion.for_element(ctx, swap_element())
    assert region.lanes.all()
    # right of travel: robot 0 heads +x (lane below), robot 1 heads -x (lane above)
    assert region.centers[0] == pytest.approx([1.5, 1.3125])
    assert region.centers[1] == pytest.approx([8.5, 1.9375])
    assert region.radii == pytest.approx([0.3125, 0.3125])


def test_same_direction_robots_stay_on_centerline(make_context, corridor):
    ctx = make_context(corridor, [disk(0), disk(1)], sk=corridor_skeleton())
    region = DynamicRegion.for_element(ctx, corridor_element((0, 1)))
    assert not region.lanes.any()
    assert region.centers[:, 1] == pytest.approx([1.5, 1.5])


def test_opposing_robots_pass_in_two_lane_corridor(make_context):
    ws = two_lane_corridor()
    ctx = make_context(ws, [disk(0), disk(1)], sk=swap_skeleton(), seed=3)
    starts = CompositeConfiguration.from_mapping({0: (1.5, 1.625), 1: (8.5, 1.625)})
    path = region_rrt_edge(ctx, swap_element(), starts)

    final = path.states[-1]
    assert np.hypot(*(final[0] - (8.5, 1.3125))) <= 0.3125 + 1e-9
    assert np.hypot(*(final[1] - (1.5, 1.9375))) <= 0.3125 + 1e-9
    for i in (0, 1):
        assert (clearances(ws, path.states[:, i]) >= 0.25).all()
        assert (step_lengths(path, i) <= 1.0 * path.dt + 1e-9).all()
    separation = np.hypot(*(path.states[:, 0] - path.states[:, 1]).T)
    assert (separation >= 0.5).all()


def cross_skeleton():
    """Center 0 at (5, 5); edges 0 west, 1 east, 2 south, 3 north."""
    positions = {0: (5.0, 5.0), 1: (1.0, 5.0), 2: (9.0, 5.0), 3: (5.0, 1.0), 4: (5.0, 9.0)}
    return make_skeleton(positions, [(1, 0), (0, 2), (3, 0), (0, 4)])


def test_transition_hands_robots_onto_outgoing_edges(make_context, empty_room):
    ctx = make_context(empty_room, [disk(0), disk(1)], sk=cross_skeleton(), seed=5)
    # robot 0 turns west -> north, robot 1 south -> east
    arc = Hyperarc(
        id=0,
        kind=TRANSITION_VERTEX,
        tail=(0, 1),
        head=(2, 3),
        step=3,
        vertex=0,
        incoming=((0, 0), (1, 2)),
        outgoing=((0, 3), (1, 1)),
    )
    assert arc.crossing == (0, 1)
    starts = CompositeConfiguration.from_mapping({0: (4.0, 5.0), 1: (5.0, 4.0)})
    path = rrt_transition(ctx, arc, starts)

    assert np.allclose(path.states[0], [(4.0, 5.0), (5.0, 4.0)])
    assert np.hypot(*(path.states[-1, 0] - (5.0, 6.0))) <= 0.5 + 1e-9
    assert np.hypot(*(path.states[-1, 1] - (6.0, 5.0))) <= 0.5 + 1e-9
    for i in (0, 1):
        assert (step_lengths(path, i) <= 1.0 * path.dt + 1e-9).all()
    separation = np.hypot(*(path.states[:, 0] - path.states[:, 1]).T)
    assert (separation >= 0.5).all()


def test_short_edge_entry_and_exit_meet_mid_edge():
    sk = make_skeleton({0: (0.0, 0.0), 1: (1.5, 0.0)}, [(0, 1)])
    edge = sk.edges[0]
    assert entry_offset(edge, 1.0) == pytest.approx(0.75)
    assert exit_offset(edge, 1.0) == pytest.approx(0.75)
    long_edge = corridor_skeleton().edges[0]
    assert entry_offset(long_edge, 1.0) == pytest.approx(1.0)
    assert exit_offset(long_edge, 1.0) == pytest.approx(long_edge.length - 1.0)
