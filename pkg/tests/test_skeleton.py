import networkx as nx
import numpy as np
import pytest

from conftest import make_skeleton
from skeleton import (
    SkeletonConstructionError,
    annotate_capacities,
    attach_points,
    build_grid_skeleton,
    project,
    skeleton_from_dict,
    split_edge_at,
)
from workspace import Workspace


def test_empty_room_skeleton_meets_at_center(empty_room):
    sk = build_grid_skeleton(empty_room, 0.25)
    near = [v for v in sk.vertices.values() if np.hypot(v.position[0] - 5, v.position[1] - 5) <= 0.5]
    assert near
    assert any(abs(v.clearance - 5.0) <= 0.5 for v in near)


def test_corridor_skeleton_follows_centerline(corridor):
    sk = build_grid_skeleton(corridor, 0.1)
    for v in sk.vertices.values():
        assert 1.0 < v.position[1] < 2.0
    lengths = dict(nx.all_pairs_dijkstra_path_length(sk.graph(), weight="length"))
    span = max(d for targets in lengths.values() for d in targets.values())
    assert 8.0 <= span <= 10.5
    main = max(sk.edges.values(), key=lambda e: e.length)
    assert float(np.median(main.point_clearances)) == pytest.approx(0.5, abs=0.1)


def test_empty_room_skeleton_keeps_its_diagonals(empty_room):
    sk = build_grid_skeleton(empty_room, 0.25)
    centre = min(sk.vertices.values(), key=lambda v: np.hypot(v.position[0] - 5, v.position[1] - 5))
    assert sk.graph().degree(centre.id) >= 4
    # each diagonal runs out to a dead end cut back near its corner
    for corner in ((0.5, 0.5), (9.5, 0.5), (0.5, 9.5), (9.5, 9.5)):
        assert any(np.hypot(v.position[0] - corner[0], v.position[1] - corner[1]) <= 1.0
                   for v in sk.vertices.values())


def test_corridor_end_forks_are_pruned(corridor):
    sk = build_grid_skeleton(corridor, 0.1)
    for v in sk.vertices.values():
        assert 1.3 <= v.position[1] <= 1.7
        assert v.clearance >= 0.2


def test_skeleton_edges_run_from_lower_vertex(corridor):
    sk = build_grid_skeleton(corridor, 0.1)
    for e in sk.edges.values():
        assert e.u < e.v
        assert np.allclose(e.polyline[0], sk.vertices[e.u].position)
        assert np.allclose(e.polyline[-1], sk.vertices[e.v].position)


def test_blocked_workspace_has_no_skeleton():
    ws = Workspace(bounds=(0, 0, 4, 4), obstacles=(((0, 0), (4, 0), (4, 4), (0, 4)),))
    with pytest.raises(SkeletonConstructionError):
        build_grid_skeleton(ws, 0.25)


def test_cell_must_be_small_against_extent(empty_room):
    with pytest.raises(ValueError):
        build_grid_skeleton(empty_room, 3.0)


@pytest.mark.parametrize("clearance, expected", [(0.5, 1), (1.0, 2), (0.3, 0)])
def test_capacity_from_clearance(clearance, expected):
    sk = make_skeleton({0: (0, 0), 1: (2, 0)}, [(0, 1)], clearance=clearance)
    caps = annotate_capacities(sk, 0.4)
    assert caps.edge_capacity[0] == expected
    assert caps.vertex_capacity[0] == expected


def test_passing_mode_counts_diameters():
    sk = make_skeleton({0: (0, 0), 1: (2, 0)}, [(0, 1)], clearance=1.0)
    assert annotate_capacities(sk, 0.4, mode="passing").edge_capacity[0] == 1


def test_project_onto_vertex(line_skeleton):
    proj = project(line_skeleton, (0, 0))
    assert proj.is_vertex and proj.vertex == 0


def test_project_onto_edge_interior():
    sk = make_skeleton({0: (0, 0), 1: (4, 0)}, [(0, 1)])
    proj = project(sk, (2.0, 0.3))
    assert proj.edge == 0
    assert proj.offset == pytest.approx(2.0)
    assert proj.distance == pytest.approx(0.3)


def test_project_tie_prefers_lower_edge_id():
    sk = make_skeleton({0: (0, 0), 1: (4, 0), 2: (0, 2), 3: (4, 2)}, [(0, 1), (2, 3)])
    assert project(sk, (2.0, 1.0)).edge == 0


def test_attach_splits_edge_interior():
    sk = make_skeleton({0: (0, 0), 1: (4, 0)}, [(0, 1)])
    sk2, ids = attach_points(sk, [(2.0, 0.1)], snap=0.5)
    new = ids[0]
    assert new not in sk.vertices
    assert sk2.vertices[new].position == pytest.approx((2.0, 0.0))
    assert len(sk2.incident(new)) == 2
    assert 0 not in sk2.edges
    assert sum(e.length for e in sk2.edges.values()) == pytest.approx(4.0)


def test_attach_snaps_near_edge_end():
    sk = make_skeleton({0: (0, 0), 1: (4, 0)}, [(0, 1)])
    sk2, ids = attach_points(sk, [(0.4, 0.1)], snap=0.6)
    assert ids == [0]
    assert sk2.edges.keys() == sk.edges.keys()


def test_split_rejects_endpoint_index(line_skeleton):
    with pytest.raises(ValueError):
        split_edge_at(line_skeleton, 0, 0)


def test_point_at_respects_direction():
    e = make_skeleton({0: (0, 0), 1: (4, 0)}, [(0, 1)]).edges[0]
    assert e.point_at(1.0, 1) == pytest.approx([1.0, 0.0])
    assert e.point_at(1.0, -1) == pytest.approx([3.0, 0.0])
    assert e.direction_from(1) == -1


def test_missing_clearances_come_from_workspace(empty_room):
    data = {
        "vertices": [{"id": 0, "pos": [5, 5]}, {"id": 1, "pos": [5, 8]}],
        "edges": [{"id": 0, "u": 0, "v": 1, "polyline": [[5, 5], [5, 8]]}],
    }
    sk = skeleton_from_dict(data, empty_room)
    assert sk.vertices[0].clearance == pytest.approx(5.0)
    assert sk.edges[0].min_clearance == pytest.approx(2.0)
    with pytest.raises(ValueError):
        skeleton_from_dict(data)
