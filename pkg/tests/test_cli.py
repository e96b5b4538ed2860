import asyncio
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))

import config
import gdash
import mcp_server
from conftest import disk
from guided_dash import Solution, save_solution
from scenarios import Scenario, load_scenario, save_scenario


@pytest.fixture
def data_dirs(tmp_path, monkeypatch):
    """Point every data directory at tmp_path."""
    monkeypatch.setattr(config, "SCENARIOS_DIR", tmp_path / "scenarios")
    monkeypatch.setattr(config, "SOLUTIONS_DIR", tmp_path / "solutions")
    monkeypatch.setattr(config, "RESULTS_DIR", tmp_path / "results")
    return tmp_path


def room_files(directory, empty_room, span=1.0):
    """Scenario plus a straight two-robot solution covering `span` meters in ten samples."""
    scenario = Scenario(
        name="room",
        workspace=empty_room,
        robots=[disk(0), disk(1)],
        starts={0: (1.0, 1.0), 1: (5.0, 5.0)},
        goals={0: (1.0 + span, 1.0), 1: (5.0, 5.0 + span)},
    )
    t = np.linspace(0.0, span, 11)[:, None]
    solution = Solution(dt=0.1, trajectories={
        0: np.hstack([1.0 + t, np.ones_like(t)]),
        1: np.hstack([np.full_like(t, 5.0), 5.0 + t]),
    })
    directory.mkdir(parents=True, exist_ok=True)
    scenario_path, solution_path = directory / "room.json", directory / "room-solution.json"
    save_scenario(scenario, scenario_path)
    save_solution(solution, solution_path)
    return scenario_path, solution_path


def run(argv):
    args = gdash.build_parser().parse_args(argv)
    return args.func(args)


# ---------- argument parsing ----------

def test_plan_defaults():
    args = gdash.build_parser().parse_args(["plan", "--scenario", "s.json"])
    assert args.method == "wg-dash"
    assert args.seed is None
    assert args.func is gdash.cmd_plan


def test_subcommand_is_required():
    with pytest.raises(SystemExit):
        gdash.build_parser().parse_args([])


def test_unknown_method_is_rejected():
    with pytest.raises(SystemExit):
        gdash.build_parser().parse_args(["plan", "--scenario", "s.json", "--method", "nope"])


# ---------- commands ----------

def test_gen_writes_warehouse(data_dirs):
    out = data_dirs / "w.json"
    assert run(["gen", "--kind", "warehouse", "--robots", "2", "--out", str(out)]) == 0
    scenario = load_scenario(out)
    assert len(scenario.robots) == 2


def test_validate_reports_clean_and_broken(data_dirs, empty_room, capsys):
    scenario_path, solution_path = room_files(data_dirs / "clean", empty_room)
    assert run(["validate", "--scenario", str(scenario_path), "--solution", str(solution_path)]) == 0
    assert "No violations" in capsys.readouterr().out

    # twice as far per sample as v_max allows
    scenario_path, solution_path = room_files(data_dirs / "fast", empty_room, span=2.0)
    assert run(["validate", "--scenario", str(scenario_path), "--solution", str(solution_path)]) == 1
    assert "velocity" in capsys.readouterr().out


def test_main_reports_missing_scenario(data_dirs, monkeypatch):
    monkeypatch.setattr(sys, "argv", ["gdash", "validate", "--scenario", str(data_dirs / "missing.json"),
                                      "--solution", str(data_dirs / "missing-solution.json")])
    assert gdash.main() == 1


# ---------- MCP tools ----------

def test_mcp_generate_saves_scenario(data_dirs):
    text = mcp_server._generate({"kind": "warehouse", "robots": 2, "aisles": 1, "name": "w.json"})
    assert "Robots: 2" in text
    assert (data_dirs / "scenarios" / "w.json").exists()


def test_mcp_generate_rejects_unknown_kind(data_dirs):
    assert mcp_server._generate({"kind": "forest"}).startswith("Error")


def test_mcp_validate_clean_solution(data_dirs, empty_room):
    scenario_path, solution_path = room_files(data_dirs / "room", empty_room)
    text = mcp_server._validate({"scenario": str(scenario_path), "solution": str(solution_path)})
    assert text.startswith("Validation of room")


def test_mcp_call_tool_checks_arguments():
    reply = asyncio.run(mcp_server.call_tool("plan_scenario", {}))
    assert "'scenario' parameter is required" in reply[0].text
    reply = asyncio.run(mcp_server.call_tool("nope", {}))
    assert reply[0].text == "Unknown tool: nope"
