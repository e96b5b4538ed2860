"""
Workspace skeleton: a rasterized medial axis turned into an embedded graph.

Edges follow free corridors and carry per-point clearance; vertices mark
junctions and dead ends. Capacities derived from clearance tell the search how
many robots a corridor admits at once.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from skimage.morphology import medial_axis

from workspace import Point, Workspace, clearances

logger = logging.getLogger(__name__)

# Spurs shorter than this many cells (or than their junction clearance) are dropped
SPUR_CELLS = 4.0
# Dead ends are cut back to this clearance, in cells
TAIL_CLEARANCE_CELLS = 2.0
# Loops closing on one vertex need this many interior pixels to be kept
MIN_LOOP_PIXELS = 3


class SkeletonConstructionError(RuntimeError):
    """Raised when no skeleton can be extracted from the workspace."""


@dataclass(frozen=True)
class SkeletonVertex:
    id: int
    position: Point
    clearance: float


@dataclass(frozen=True)
class SkeletonEdge:
    """Corridor between two vertices; polyline runs from u to v."""
    id: int
    u: int
    v: int
    polyline: Tuple[Point, ...]
    point_clearances: Tuple[float, ...]

    def __post_init__(self):
        if len(self.polyline) < 2:
            raise ValueError(f"Edge {self.id} needs at least two polyline points")
        if len(self.polyline) != len(self.point_clearances):
            raise ValueError(f"Edge {self.id}: one clearance per polyline point required")

    @property
    def min_clearance(self) -> float:
        return min(self.point_clearances)

    @cached_property
    def points(self) -> np.ndarray:
        return np.array(self.polyline, dtype=float)

    @cached_property
    def cumulative(self) -> np.ndarray:
        seg = np.hypot(*np.diff(self.points, axis=0).T)
        return np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.cumulative[-1])

    def other_end(self, vertex: int) -> int:
        if vertex == self.u:
            return self.v
        if vertex == self.v:
            return self.u
        raise ValueError(f"Vertex {vertex} is not an endpoint of edge {self.id}")

    def direction_from(self, vertex: int) -> int:
        """+1 when leaving `vertex` runs along the polyline, -1 against it."""
        if vertex == self.u:
            return 1
        if vertex == self.v:
            return -1
        raise ValueError(f"Vertex {vertex} is not an endpoint of edge {self.id}")

    def point_at(self, offset: float, direction: int = 1) -> np.ndarray:
        """Point at arc length `offset` measured from the entry vertex of `direction`."""
        length = self.length
        s = min(max(offset, 0.0), length)
        if direction < 0:
            s = length - s
        return np.array([
            np.interp(s, self.cumulative, self.points[:, 0]),
            np.interp(s, self.cumulative, self.points[:, 1]),
        ])


@dataclass
class WorkspaceSkeleton:
    vertices: Dict[int, SkeletonVertex]
    edges: Dict[int, SkeletonEdge]

    _graph: Optional[nx.MultiGraph] = field(default=None, init=False, repr=False, compare=False)

    def incident(self, vertex: int) -> List[int]:
        return sorted(e.id for e in self.edges.values() if vertex in (e.u, e.v))

    def graph(self) -> nx.MultiGraph:
        """Vertex graph with one keyed edge per skeleton edge (weight = length)."""
        if self._graph is None:
            g = nx.MultiGraph()
            g.add_nodes_from(sorted(self.vertices))
            for eid in sorted(self.edges):
                e = self.edges[eid]
                g.add_edge(e.u, e.v, key=eid, length=e.length)
            self._graph = g
        return self._graph

    def vertex_position(self, vertex: int) -> np.ndarray:
        return np.array(self.vertices[vertex].position, dtype=float)


@dataclass
class CapacityAnnotation:
    vertex_capacity: Dict[int, int]
    edge_capacity: Dict[int, int]

    def vertex_usable(self, vertex: int) -> bool:
        return self.vertex_capacity.get(vertex, 0) > 0

    def edge_usable(self, edge: int) -> bool:
        return self.edge_capacity.get(edge, 0) > 0


@dataclass(frozen=True)
class Projection:
    """Nearest skeleton point: either a vertex or a polyline point of an edge."""
    distance: float
    vertex: Optional[int] = None
    edge: Optional[int] = None
    offset: float = 0.0
    index: int = 0

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None


def _make_edge(ws: Optional[Workspace], eid: int, u: int, v: int, polyline: Sequence[Point],
               point_clearances: Optional[Sequence[float]] = None) -> SkeletonEdge:
    poly = tuple((float(x), float(y)) for x, y in polyline)
    if point_clearances is None:
        point_clearances = clearances(ws, poly)
    return SkeletonEdge(id=eid, u=u, v=v, polyline=poly,
                        point_clearances=tuple(float(c) for c in point_clearances))


# ============================================================
# Construction
# ============================================================

def _pixel_graph(skel: np.ndarray) -> nx.Graph:
    """8-connected pixel graph; diagonal links are dropped where an orthogonal path exists."""
    pixels = [tuple(p) for p in np.argwhere(skel)]
    present = set(pixels)
    g = nx.Graph()
    g.add_nodes_from(pixels)
    for j, i in pixels:
        for dj, di in ((0, 1), (1, 0)):
            if (j + dj, i + di) in present:
                g.add_edge((j, i), (j + dj, i + di))
        for dj, di in ((1, 1), (1, -1)):
            q = (j + dj, i + di)
            if q in present and (j + dj, i) not in present and (j, i + di) not in present:
                g.add_edge((j, i), q)
    return g


def _trace_chains(g: nx.Graph, cluster_of: Dict[Tuple[int, int], int]):
    """Walk every maximal degree-2 chain between vertex pixels."""
    visited = set()
    chains = []
    for p in sorted(cluster_of):
        for q in sorted(g.neighbors(p)):
            if (p, q) in visited:
                continue
            if q in cluster_of and cluster_of[q] == cluster_of[p]:
                continue
            visited.add((p, q))
            path = [p, q]
            prev, cur = p, q
            while cur not in cluster_of:
                nxt = [n for n in g.neighbors(cur) if n != prev]
                prev, cur = cur, nxt[0]
                path.append(cur)
            visited.add((cur, prev))
            chains.append((cluster_of[p], cluster_of[cur], path))
    return chains


def _degrees(edges: Dict[int, dict]) -> Dict[int, int]:
    deg: Dict[int, int] = {}
    for e in edges.values():
        deg[e["u"]] = deg.get(e["u"], 0) + 1
        deg[e["v"]] = deg.get(e["v"], 0) + 1
    return deg


def _polyline_length(points: List[Point]) -> float:
    arr = np.asarray(points, dtype=float)
    return float(np.hypot(*np.diff(arr, axis=0).T).sum()) if len(arr) > 1 else 0.0


def _trim_leaf_tails(ws: Workspace, vertices: Dict[int, Point], edges: Dict[int, dict], min_clearance: float):
    """Cut dead-end edges back to their last point with at least min_clearance."""
    deg = _degrees(edges)
    for eid in sorted(edges):
        e = edges[eid]
        if e["u"] == e["v"]:
            continue
        for end in ("u", "v"):
            if deg.get(e[end], 0) != 1:
                continue
            points = e["points"] if end == "v" else e["points"][::-1]
            clear = clearances(ws, points)
            keep = len(points)
            while keep > 2 and clear[keep - 1] < min_clearance:
                keep -= 1
            if keep == len(points):
                continue
            points = points[:keep]
            vertices[e[end]] = points[-1]
            e["points"] = points if end == "v" else points[::-1]


def _prune_spurs(ws: Workspace, vertices: Dict[int, Point], edges: Dict[int, dict], min_length: float):
    """Drop dead-end edges shorter than min_length or than the clearance at their junction."""
    while True:
        deg = _degrees(edges)
        pruned = False
        for eid in sorted(edges):
            e = edges[eid]
            leaf_u = deg.get(e["u"], 0) == 1
            leaf_v = deg.get(e["v"], 0) == 1
            if leaf_u == leaf_v:
                continue
            leaf, junction = (e["u"], e["v"]) if leaf_u else (e["v"], e["u"])
            junction_clearance = float(clearances(ws, [vertices[junction]])[0])
            if _polyline_length(e["points"]) < max(min_length, junction_clearance):
                del edges[eid]
                del vertices[leaf]
                pruned = True
                break
        if not pruned:
            return


def _dissolve_degree_two(vertices: Dict[int, Point], edges: Dict[int, dict], next_edge: int) -> int:
    while True:
        merged = False
        for vid in sorted(vertices):
            incident = [eid for eid in sorted(edges) if vid in (edges[eid]["u"], edges[eid]["v"])]
            if len(incident) != 2:
                continue
            e1, e2 = edges[incident[0]], edges[incident[1]]
            if e1["u"] == e1["v"] or e2["u"] == e2["v"]:
                continue
            a = e1["u"] if e1["v"] == vid else e1["v"]
            b = e2["v"] if e2["u"] == vid else e2["u"]
            if a == b:
                continue
            first = e1["points"] if e1["v"] == vid else e1["points"][::-1]
            second = e2["points"] if e2["u"] == vid else e2["points"][::-1]
            del edges[incident[0]]
            del edges[incident[1]]
            del vertices[vid]
            edges[next_edge] = {"u": a, "v": b, "points": list(first) + list(second[1:])}
            next_edge += 1
            merged = True
            break
        if not merged:
            return next_edge


def build_grid_skeleton(ws: Workspace, cell: float) -> WorkspaceSkeleton:
    """
    Rasterize free space at `cell` resolution, take its medial axis and extract the skeleton graph.

    Args:
        ws: Workspace to skeletonize
        cell: Grid resolution in meters

    Returns:
        WorkspaceSkeleton with vertex ids ordered by (y, x) and edge polylines from u < v

    Raises:
        ValueError: cell outside (0, min extent / 4)
        SkeletonConstructionError: no free space
    """
    width, height = ws.extent
    if not 0 < cell < min(width, height) / 4:
        raise ValueError(f"cell must lie in (0, {min(width, height) / 4}), got {cell}")

    xmin, ymin, _, _ = ws.bounds
    nx_cells = math.ceil(width / cell - 1e-9)
    ny_cells = math.ceil(height / cell - 1e-9)
    xs = xmin + (np.arange(nx_cells) + 0.5) * cell
    ys = ymin + (np.arange(ny_cells) + 0.5) * cell
    grid_x, grid_y = np.meshgrid(xs, ys)
    centers = np.column_stack([grid_x.ravel(), grid_y.ravel()])
    free = (clearances(ws, centers) > 0).reshape(ny_cells, nx_cells)
    if not free.any():
        raise SkeletonConstructionError("Workspace has no free space at this resolution")

    # padded so the bounds act as walls
    skel = medial_axis(np.pad(free, 1), rng=0)[1:-1, 1:-1]
    g = _pixel_graph(skel)
    logger.debug(f"Medial axis of {int(free.sum())} free cells has {g.number_of_nodes()} skeleton pixels")

    def center(pixel) -> Point:
        return float(xs[pixel[1]]), float(ys[pixel[0]])

    pixel_clearance = {p: float(c) for p, c in zip(g.nodes, clearances(ws, [center(p) for p in g.nodes]))}

    # Vertex pixels: clusters of junction pixels plus every dead end
    cluster_of: Dict[Tuple[int, int], int] = {}
    clusters: List[List[Tuple[int, int]]] = []
    junctions = [p for p in g.nodes if g.degree(p) >= 3]
    for component in sorted((sorted(c) for c in nx.connected_components(g.subgraph(junctions)))):
        for p in component:
            cluster_of[p] = len(clusters)
        clusters.append(component)
    for p in sorted(g.nodes):
        if g.degree(p) <= 1:
            cluster_of[p] = len(clusters)
            clusters.append([p])
    # Pure loops get an anchor pixel
    for component in sorted(sorted(c) for c in nx.connected_components(g)):
        if not any(p in cluster_of for p in component):
            cluster_of[component[0]] = len(clusters)
            clusters.append([component[0]])

    vertices: Dict[int, Point] = {}
    for cid, members in enumerate(clusters):
        best = max(members, key=lambda p: (pixel_clearance[p], -p[0], -p[1]))
        vertices[cid] = center(best)

    edges: Dict[int, dict] = {}
    next_vertex = len(clusters)
    for cu, cv, path in _trace_chains(g, cluster_of):
        interior = [center(p) for p in path[1:-1]]
        if cu != cv:
            edges[len(edges)] = {"u": cu, "v": cv, "points": [vertices[cu]] + interior + [vertices[cv]]}
            continue
        if len(interior) < MIN_LOOP_PIXELS:
            continue
        # Split loops so no edge starts and ends on the same vertex
        k = len(interior) // 2
        vertices[next_vertex] = interior[k]
        edges[len(edges)] = {"u": cu, "v": next_vertex, "points": [vertices[cu]] + interior[:k + 1]}
        edges[len(edges)] = {"u": next_vertex, "v": cv, "points": interior[k:] + [vertices[cv]]}
        next_vertex += 1

    _trim_leaf_tails(ws, vertices, edges, TAIL_CLEARANCE_CELLS * cell)
    _prune_spurs(ws, vertices, edges, SPUR_CELLS * cell)
    _dissolve_degree_two(vertices, edges, next_edge=max(edges, default=-1) + 1)

    return _finalize(ws, vertices, edges)


def _finalize(ws: Workspace, vertices: Dict[int, Point], edges: Dict[int, dict]) -> WorkspaceSkeleton:
    if not vertices:
        raise SkeletonConstructionError("Skeleton extraction produced no vertices")
    order = sorted(vertices, key=lambda vid: (vertices[vid][1], vertices[vid][0], vid))
    renumber = {old: new for new, old in enumerate(order)}
    vertex_clearance = clearances(ws, [vertices[old] for old in order])
    final_vertices = {
        new: SkeletonVertex(id=new, position=vertices[old], clearance=float(vertex_clearance[new]))
        for new, old in enumerate(order)
    }

    staged = []
    for e in edges.values():
        u, v, points = renumber[e["u"]], renumber[e["v"]], list(e["points"])
        if u > v:
            u, v, points = v, u, points[::-1]
        mid = points[len(points) // 2]
        staged.append((u, v, mid[1], mid[0], len(points), points))
    staged.sort(key=lambda item: item[:5])
    final_edges = {
        eid: _make_edge(ws, eid, u, v, points)
        for eid, (u, v, _, _, _, points) in enumerate(staged)
    }

    logger.info(f"✅ Skeleton with {len(final_vertices)} vertices and {len(final_edges)} edges")
    return WorkspaceSkeleton(vertices=final_vertices, edges=final_edges)


# ============================================================
# Annotation and queries
# ============================================================

def annotate_capacities(sk: WorkspaceSkeleton, robot_radius: float, mode: str = "radius") -> CapacityAnnotation:
    """
    Robot capacity of every vertex and edge from its minimum clearance.

    Args:
        sk: Skeleton to annotate
        robot_radius: Radius of the largest robot
        mode: "radius" counts radii between centerline and wall, floor(c / r);
              "passing" counts diameters, floor(c / 2r)
    """
    if robot_radius <= 0:
        raise ValueError("robot_radius must be positive")
    if mode not in ("radius", "passing"):
        raise ValueError(f"Unknown capacity mode {mode!r}")
    unit = robot_radius if mode == "radius" else 2.0 * robot_radius

    def capacity(c: float) -> int:
        return max(0, math.floor(c / unit + 1e-9))

    return CapacityAnnotation(
        vertex_capacity={vid: capacity(v.clearance) for vid, v in sk.vertices.items()},
        edge_capacity={eid: capacity(e.min_clearance) for eid, e in sk.edges.items()},
    )


def project(sk: WorkspaceSkeleton, p: Sequence[float]) -> Projection:
    """Nearest vertex or polyline point; vertices win ties, then lower ids."""
    if not sk.vertices:
        raise ValueError("Cannot project onto an empty skeleton")
    q = np.asarray(p[:2], dtype=float)
    best_key = None
    best: Optional[Projection] = None
    for vid in sorted(sk.vertices):
        d = float(np.hypot(*(sk.vertex_position(vid) - q)))
        key = (d, 0, vid)
        if best_key is None or key < best_key:
            best_key, best = key, Projection(distance=d, vertex=vid)
    for eid in sorted(sk.edges):
        e = sk.edges[eid]
        dists = np.hypot(*(e.points - q).T)
        index = int(np.argmin(dists))
        key = (float(dists[index]), 1, eid)
        if key < best_key:
            if index == 0:
                best_key, best = key, Projection(distance=key[0], vertex=e.u)
            elif index == len(e.polyline) - 1:
                best_key, best = key, Projection(distance=key[0], vertex=e.v)
            else:
                best_key, best = key, Projection(distance=key[0], edge=eid,
                                                 offset=float(e.cumulative[index]), index=index)
    return best


def split_edge_at(sk: WorkspaceSkeleton, edge_id: int, index: int) -> Tuple[WorkspaceSkeleton, int]:
    """Insert a vertex at an interior polyline point, replacing the edge by two."""
    e = sk.edges[edge_id]
    if not 0 < index < len(e.polyline) - 1:
        raise ValueError(f"Index {index} is not interior to edge {edge_id}")
    vid = max(sk.vertices) + 1
    next_edge = max(sk.edges) + 1
    vertices = dict(sk.vertices)
    vertices[vid] = SkeletonVertex(id=vid, position=e.polyline[index], clearance=e.point_clearances[index])
    edges = {k: v for k, v in sk.edges.items() if k != edge_id}
    edges[next_edge] = _make_edge(None, next_edge, e.u, vid, e.polyline[:index + 1],
                                  e.point_clearances[:index + 1])
    edges[next_edge + 1] = _make_edge(None, next_edge + 1, vid, e.v, e.polyline[index:],
                                      e.point_clearances[index:])
    return WorkspaceSkeleton(vertices=vertices, edges=edges), vid


def attach_points(sk: WorkspaceSkeleton, points: Sequence[Sequence[float]],
                  snap: float) -> Tuple[WorkspaceSkeleton, List[int]]:
    """
    Map query points to skeleton vertices, splitting edges where needed.

    Points projecting within `snap` meters of arc length from an edge end use
    that end's vertex instead of creating a short edge.
    """
    vertex_ids = []
    for p in points:
        proj = project(sk, p)
        if proj.is_vertex:
            vertex_ids.append(proj.vertex)
            continue
        e = sk.edges[proj.edge]
        if proj.offset < snap:
            vertex_ids.append(e.u)
        elif e.length - proj.offset < snap:
            vertex_ids.append(e.v)
        else:
            sk, vid = split_edge_at(sk, proj.edge, proj.index)
            vertex_ids.append(vid)
    return sk, vertex_ids


# ============================================================
# JSON IO
# ============================================================

def skeleton_to_dict(sk: WorkspaceSkeleton) -> Dict[str, Any]:
    return {
        "vertices": [
            {"id": v.id, "pos": list(v.position), "clearance": v.clearance}
            for v in (sk.vertices[k] for k in sorted(sk.vertices))
        ],
        "edges": [
            {"id": e.id, "u": e.u, "v": e.v,
             "polyline": [list(p) for p in e.polyline], "clearances": list(e.point_clearances)}
            for e in (sk.edges[k] for k in sorted(sk.edges))
        ],
    }


def skeleton_from_dict(data: Dict[str, Any], ws: Optional[Workspace] = None) -> WorkspaceSkeleton:
    """
    Build a skeleton from its JSON form. Missing clearances are computed from `ws`.
    """
    try:
        vertices = {}
        for item in data["vertices"]:
            pos = (float(item["pos"][0]), float(item["pos"][1]))
            clearance = item.get("clearance")
            if clearance is None:
                if ws is None:
                    raise ValueError(f"Vertex {item['id']} has no clearance and no workspace was given")
                clearance = float(clearances(ws, [pos])[0])
            vertices[int(item["id"])] = SkeletonVertex(id=int(item["id"]), position=pos, clearance=float(clearance))
        edges = {}
        for item in data["edges"]:
            point_clearances = item.get("clearances")
            if point_clearances is None and ws is None:
                raise ValueError(f"Edge {item['id']} has no clearances and no workspace was given")
            edge = _make_edge(ws, int(item["id"]), int(item["u"]), int(item["v"]),
                              [tuple(p) for p in item["polyline"]], point_clearances)
            edges[edge.id] = edge
    except (KeyError, TypeError, IndexError) as e:
        raise ValueError(f"Malformed skeleton data: {e}") from e
    for e in edges.values():
        if e.u not in vertices or e.v not in vertices:
            raise ValueError(f"Edge {e.id} references an unknown vertex")
    return WorkspaceSkeleton(vertices=vertices, edges=edges)


def save_skeleton(sk: WorkspaceSkeleton, path: Union[str, Path]):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(skeleton_to_dict(sk), f, indent=2)
    logger.info(f"Saved skeleton ({len(sk.vertices)} vertices, {len(sk.edges)} edges) to {path}")


def load_skeleton(path: Union[str, Path], ws: Optional[Workspace] = None) -> WorkspaceSkeleton:
    with open(path, 'r', encoding='utf-8') as f:
        return skeleton_from_dict(json.load(f), ws)
