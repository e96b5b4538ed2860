"""
SVG figures of scenarios, skeletons and robot trajectories.
"""
import logging
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from guided_dash import Solution
from scenarios import Scenario
from skeleton import WorkspaceSkeleton

logger = logging.getLogger(__name__)

PIXELS_PER_METER = 50.0
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
    "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
)


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class _Canvas:
    """Workspace coordinates → SVG pixels (y axis pointing up)."""

    def __init__(self, bounds: Sequence[float]):
        self.xmin, self.ymin, self.xmax, self.ymax = bounds
        self.width = (self.xmax - self.xmin) * PIXELS_PER_METER
        self.height = (self.ymax - self.ymin) * PIXELS_PER_METER
        self.root = ET.Element(
            "svg",
            xmlns="http://www.w3.org/2000/svg",
            version="1.1",
            width=f"{_fmt(self.width)}px",
            height=f"{_fmt(self.height)}px",
            viewBox=f"0 0 {_fmt(self.width)} {_fmt(self.height)}",
        )

    def xy(self, p: Sequence[float]):
        return (float(p[0]) - self.xmin) * PIXELS_PER_METER, (self.ymax - float(p[1])) * PIXELS_PER_METER

    def group(self, name: str) -> ET.Element:
        return ET.SubElement(self.root, "g", id=name)

    def line_list(self, parent: ET.Element, points: Iterable[Sequence[float]], closed: bool = False,
                  **attrs) -> Optional[ET.Element]:
        pts = [self.xy(p) for p in points]
        if not pts:
            return None
        d = f"M{_fmt(pts[0][0])} {_fmt(pts[0][1])}" + "".join(f"L{_fmt(x)} {_fmt(y)}" for x, y in pts[1:])
        if closed:
            d += "z"
        return ET.SubElement(parent, "path", d=d, **attrs)

    def circle(self, parent: ET.Element, p: Sequence[float], radius: float, **attrs) -> ET.Element:
        x, y = self.xy(p)
        return ET.SubElement(parent, "circle", cx=_fmt(x), cy=_fmt(y), r=_fmt(radius * PIXELS_PER_METER), **attrs)


def render_svg(scenario: Scenario, solution: Optional[Solution] = None,
               skeleton: Optional[WorkspaceSkeleton] = None) -> str:
    """
    Draw bounds, obstacles, the skeleton (gray), trajectories (one color per
    robot) and start/goal markers.

    Returns:
        SVG document text; identical inputs give identical text
    """
    ws = scenario.workspace
    canvas = _Canvas(ws.bounds)
    xmin, ymin, xmax, ymax = ws.bounds
    frame = canvas.group("bounds")
    canvas.line_list(frame, [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)], closed=True,
                     fill="white", stroke="black", **{"stroke-width": "2"})

    if ws.obstacles:
        obstacles = canvas.group("obstacles")
        for poly in ws.obstacles:
            canvas.line_list(obstacles, poly, closed=True, fill="#404040", stroke="none")

    if skeleton is not None:
        layer = canvas.group("skeleton")
        for eid in sorted(skeleton.edges):
            canvas.line_list(layer, skeleton.edges[eid].polyline, fill="none", stroke="#a0a0a0",
                             **{"stroke-width": "1.5"})
        for vid in sorted(skeleton.vertices):
            canvas.circle(layer, skeleton.vertices[vid].position, 0.05, fill="#a0a0a0")

    if solution is not None:
        paths = canvas.group("trajectories")
        for rid in sorted(solution.trajectories):
            color = PALETTE[rid % len(PALETTE)]
            canvas.line_list(paths, solution.trajectories[rid][:, :2], fill="none", stroke=color,
                             **{"stroke-width": "2", "data-robot": str(rid)})

    markers = canvas.group("robots") if scenario.robots else None
    for robot in scenario.robots:
        color = PALETTE[robot.id % len(PALETTE)]
        canvas.circle(markers, scenario.starts[robot.id], robot.radius, fill=color, stroke="black",
                      **{"fill-opacity": "0.6", "data-role": "start"})
        canvas.circle(markers, scenario.goals[robot.id], robot.radius, fill="none", stroke=color,
                      **{"stroke-width": "2", "stroke-dasharray": "4 2", "data-role": "goal"})

    return ET.tostring(canvas.root, encoding="unicode")


def write_svg(text: str, path: Union[str, Path]):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
        f.write("\n")
    logger.info(f"Wrote SVG to {path}")
