import xml.etree.ElementTree as ET

import numpy as np

from conftest import disk, make_skeleton
from guided_dash import Solution
from scenarios import Scenario, gen_warehouse
from svg_render import render_svg, write_svg

SVG = "{http://www.w3.org/2000/svg}"


def layers(text):
    return [g.get("id") for g in ET.fromstring(text).findall(f"{SVG}g")]


def test_empty_scenario_draws_only_bounds(empty_room):
    scenario = Scenario(name="empty", workspace=empty_room, robots=[], starts={}, goals={})
    assert layers(render_svg(scenario)) == ["bounds"]


def test_rendering_is_deterministic():
    scenario = gen_warehouse(2, robots=2)
    assert render_svg(scenario) == render_svg(scenario)


def test_all_layers_present(empty_room):
    scenario = Scenario(name="one", workspace=empty_room, robots=[disk(0)],
                        starts={0: (1.0, 1.0)}, goals={0: (2.0, 1.0)})
    solution = Solution(dt=0.1, trajectories={0: np.array([[1.0, 1.0], [1.05, 1.0], [1.1, 1.0]])})
    sk = make_skeleton({0: (1, 5), 1: (9, 5)}, [(0, 1)])
    text = render_svg(scenario, solution, sk)
    assert layers(text) == ["bounds", "skeleton", "trajectories", "robots"]
    root = ET.fromstring(text)
    roles = [c.get("data-role") for c in root.iter(f"{SVG}circle") if c.get("data-role")]
    assert roles == ["start", "goal"]
    assert root.get("width") == "500.000px"


def test_write_svg(tmp_path, empty_room):
    scenario = Scenario(name="empty", workspace=empty_room, robots=[], starts={}, goals={})
    path = tmp_path / "empty.svg"
    write_svg(render_svg(scenario), path)
    assert path.read_text().startswith("<svg")
