"""Shared fixtures: hand-built skeletons and robots."""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add repository root to path to import our modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import PlannerConfig
from local_planners import PlanningContext
from skeleton import CapacityAnnotation, SkeletonEdge, SkeletonVertex, WorkspaceSkeleton
from workspace import Robot, Workspace


def make_skeleton(positions, edges, clearance=1.0):
    """Straight-edge skeleton from vertex positions {id: (x, y)} and edge list [(u, v), ...]."""
    vertices = {vid: SkeletonVertex(vid, tuple(map(float, p)), clearance) for vid, p in positions.items()}
    built = {}
    for eid, (u, v) in enumerate(edges):
        a, b = np.array(positions[u], dtype=float), np.array(positions[v], dtype=float)
        n = max(2, int(np.ceil(np.hypot(*(b - a)) / 0.5)) + 1)
        polyline = tuple((float(x), float(y)) for x, y in np.linspace(a, b, n))
        built[eid] = SkeletonEdge(eid, u, v, polyline, tuple([clearance] * n))
    return WorkspaceSkeleton(vertices=vertices, edges=built)


def uniform_caps(sk, capacity):
    return CapacityAnnotation(
        vertex_capacity={v: capacity for v in sk.vertices},
        edge_capacity={e: capacity for e in sk.edges},
    )


@pytest.fixture
def line_skeleton():
    """A(0) - B(1) - C(2) along the x axis, one meter per edge."""
    return make_skeleton({0: (0, 0), 1: (1, 0), 2: (2, 0)}, [(0, 1), (1, 2)])


@pytest.fixture
def empty_room():
    return Workspace(bounds=(0.0, 0.0, 10.0, 10.0))


@pytest.fixture
def corridor():
    """Horizontal free band y in [1, 2] across a 10 x 3 workspace."""
    return Workspace(
        bounds=(0.0, 0.0, 10.0, 3.0),
        obstacles=(
            ((0.0, 0.0), (10.0, 0.0), (10.0, 1.0), (0.0, 1.0)),
            ((0.0, 2.0), (10.0, 2.0), (10.0, 3.0), (0.0, 3.0)),
        ),
    )


@pytest.fixture
def make_context():
    def build(ws, robots, sk=None, seed=0, **overrides):
        return PlanningContext(
            ws=ws,
            robots={r.id: r for r in robots},
            cfg=PlannerConfig(seed=seed, **overrides),
            rng=np.random.default_rng(seed),
            sk=sk,
        )
    return build


def disk(robot_id, radius=0.25, v_max=1.0, dynamics=None):
    return Robot(id=robot_id, radius=radius, v_max=v_max, dynamics=dynamics)
