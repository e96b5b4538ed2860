import pytest

from scenarios import (
    CAR_A_MAX,
    CAR_STEER_MAX,
    CAR_WHEELBASE,
    GenerationError,
    gen_gridmaze,
    gen_warehouse,
    load_scenario,
    save_scenario,
    scenario_to_dict,
)
from workspace import CarDynamics, config_valid


def test_warehouse_pairs_swap_ends():
    scenario = gen_warehouse(2, robots=4)
    assert scenario.name == "warehouse-a2-w2.5-r4"
    assert [r.id for r in scenario.robots] == [0, 1, 2, 3]
    for top, bottom in ((0, 1), (2, 3)):
        assert scenario.goals[top] == scenario.starts[bottom]
        assert scenario.goals[bottom] == scenario.starts[top]
        assert scenario.starts[top][0] == scenario.starts[bottom][0]


def test_warehouse_is_deterministic():
    assert scenario_to_dict(gen_warehouse(3, robots=6)) == scenario_to_dict(gen_warehouse(3, robots=6))


def test_car_warehouse_uses_full_states():
    dynamics = CarDynamics(CAR_WHEELBASE, CAR_A_MAX, CAR_STEER_MAX)
    scenario = gen_warehouse(1, robots=2, dynamics=dynamics)
    assert scenario.name == "k-warehouse-a1-w2.5-r2"
    assert scenario.is_kinodynamic
    assert all(len(s) == 4 and s[3] == 0.0 for s in scenario.starts.values())


@pytest.mark.parametrize("aisles, robots", [(2, 0), (2, 3), (2, 6)])
def test_warehouse_rejects_bad_robot_counts(aisles, robots):
    with pytest.raises(GenerationError):
        gen_warehouse(aisles, robots=robots)


def test_gridmaze_is_seed_deterministic():
    a = scenario_to_dict(gen_gridmaze((4, 4), robots=3, seed=7))
    b = scenario_to_dict(gen_gridmaze((4, 4), robots=3, seed=7))
    c = scenario_to_dict(gen_gridmaze((4, 4), robots=3, seed=8))
    assert a == b
    assert a["name"] == "gridmaze-4x4-w2.1-r3-s7"
    assert (a["workspace"], a["agents"]) != (c["workspace"], c["agents"])


def test_gridmaze_places_robots_in_free_cells():
    scenario = gen_gridmaze((5, 3), robots=4, seed=2)
    for robot in scenario.robots:
        assert config_valid(scenario.workspace, robot, scenario.starts[robot.id])
        assert config_valid(scenario.workspace, robot, scenario.goals[robot.id])
    assert len(set(scenario.starts.values())) == 4


def test_gridmaze_rejects_more_robots_than_cells():
    with pytest.raises(GenerationError):
        gen_gridmaze((2, 2), robots=5)


def test_saved_scenario_loads_back(tmp_path):
    scenario = gen_gridmaze((3, 3), robots=2, seed=1)
    path = tmp_path / "maze.json"
    save_scenario(scenario, path)
    assert scenario_to_dict(load_scenario(path)) == scenario_to_dict(scenario)
