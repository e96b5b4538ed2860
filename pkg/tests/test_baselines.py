import pytest

from baselines import baseline_composite_rrt, baseline_prioritized
from config import PlannerConfig
from conftest import disk
from guided_dash import PlanningFailure, validate
from scenarios import CAR_A_MAX, CAR_STEER_MAX, CAR_WHEELBASE, Scenario
from workspace import CarDynamics


def lanes(empty_room):
    return Scenario(
        name="lanes",
        workspace=empty_room,
        robots=[disk(0), disk(1)],
        starts={0: (1.0, 2.0), 1: (1.0, 8.0)},
        goals={0: (3.0, 2.0), 1: (3.0, 8.0)},
    )


def test_composite_rrt_connects_free_lanes(empty_room):
    scenario = lanes(empty_room)
    cfg = PlannerConfig(seed=1, timeout_s=60)
    solution = baseline_composite_rrt(scenario, cfg)
    assert solution.method == "composite-rrt"
    assert validate(solution, scenario, cfg).ok


def test_prioritized_plans_each_robot(empty_room):
    scenario = lanes(empty_room)
    cfg = PlannerConfig(seed=1, timeout_s=60)
    solution = baseline_prioritized(scenario, cfg)
    assert solution.method == "prioritized"
    report = validate(solution, scenario, cfg)
    assert report.ok, report.summary()


def test_prioritized_robot_already_at_goal(empty_room):
    scenario = Scenario(name="still", workspace=empty_room, robots=[disk(0)],
                        starts={0: (5.0, 5.0)}, goals={0: (5.0, 5.0)})
    solution = baseline_prioritized(scenario, PlannerConfig(timeout_s=10))
    assert solution.trajectories[0].shape == (1, 2)
    assert solution.makespan_s == 0.0


@pytest.mark.parametrize("planner", [baseline_composite_rrt, baseline_prioritized])
def test_baselines_refuse_cars(planner, empty_room):
    dynamics = CarDynamics(CAR_WHEELBASE, CAR_A_MAX, CAR_STEER_MAX)
    scenario = Scenario(name="cars", workspace=empty_room, robots=[disk(0, dynamics=dynamics)],
                        starts={0: (1.0, 1.0, 0.0, 0.0)}, goals={0: (3.0, 1.0, 0.0, 0.0)})
    with pytest.raises(PlanningFailure):
        planner(scenario, PlannerConfig(timeout_s=10))
