import json

import pytest

from config import PlannerConfig, load_planner_config, planner_config_from_dict


def test_relative_defaults_follow_radius():
    cfg = PlannerConfig()
    assert cfg.region_radius_for(0.25) == pytest.approx(0.5)
    assert cfg.delta_for(0.25) == pytest.approx(1.0)
    assert cfg.advance_step_for(0.25) == pytest.approx(0.25)
    assert cfg.goal_tolerance_for(0.25) == pytest.approx(0.25)


def test_explicit_values_win():
    cfg = PlannerConfig(region_radius=0.8, delta=3.0)
    assert cfg.region_radius_for(0.25) == 0.8
    assert cfg.delta_for(0.25) == 3.0
    assert cfg.advance_threshold_for(0.25) == 0.8


@pytest.mark.parametrize("overrides", [
    {"dt": 0.0},
    {"capacity_mode": "wide"},
    {"prohibition_match": "fuzzy"},
    {"goal_bias": 1.5},
    {"dt_min": 2.0, "dt_max": 1.0},
    {"n_fail": 0},
])
def test_invalid_values_are_rejected(overrides):
    with pytest.raises(ValueError):
        PlannerConfig(**overrides)


def test_unknown_keys_are_rejected():
    with pytest.raises(ValueError, match="colour"):
        planner_config_from_dict({"colour": "red"})


def test_file_then_overrides(tmp_path):
    path = tmp_path / "planner.json"
    path.write_text(json.dumps({"seed": 4, "n_fail": 50}))
    cfg = load_planner_config(path, seed=9, timeout_s=None)
    assert cfg.seed == 9
    assert cfg.n_fail == 50
    assert cfg.timeout_s == PlannerConfig().timeout_s


def test_file_must_hold_an_object(tmp_path):
    path = tmp_path / "planner.json"
    path.write_text("[1, 2]")
    with pytest.raises(ValueError):
        load_planner_config(path)
