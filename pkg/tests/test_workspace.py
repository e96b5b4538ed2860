import math

import numpy as np
import pytest

from workspace import (
    CarDynamics,
    CompositeConfiguration,
    Robot,
    Workspace,
    brake_to_stop,
    clearances,
    config_valid,
    integrate,
    load_workspace,
    local_path_valid,
    normalize_angle,
    point_clearance,
    robots_collide,
    save_workspace,
    segment_clearances,
    workspace_from_dict,
    workspace_to_dict,
)

UNIT_SQUARE = ((4.0, 4.0), (5.0, 4.0), (5.0, 5.0), (4.0, 5.0))


def with_square():
    return Workspace(bounds=(0, 0, 10, 10), obstacles=(UNIT_SQUARE,))


def car(v_max=2.0, wheelbase=1.0, a_max=1.0, steer_max=0.6):
    return Robot(id=0, radius=0.25, v_max=v_max, dynamics=CarDynamics(wheelbase, a_max, steer_max))


# ---------- clearance ----------

def test_clearance_center_of_empty_room(empty_room):
    assert point_clearance(empty_room, (5, 5)) == pytest.approx(5.0)


def test_clearance_near_left_wall(empty_room):
    assert point_clearance(empty_room, (1, 5)) == pytest.approx(1.0)


def test_clearance_next_to_obstacle():
    assert point_clearance(with_square(), (3, 4.5)) == pytest.approx(1.0)


def test_clearance_matches_brute_force_segment_scan():
    ws = with_square()
    rng = np.random.default_rng(3)
    pts = rng.uniform(0.0, 10.0, size=(50, 2))
    segments = [(UNIT_SQUARE[i], UNIT_SQUARE[(i + 1) % 4]) for i in range(4)]
    corners = ((0, 0), (10, 0), (10, 10), (0, 10))
    segments += [(corners[i], corners[(i + 1) % 4]) for i in range(4)]

    def seg_dist(p, a, b):
        a, b = np.array(a, float), np.array(b, float)
        t = np.clip(np.dot(p - a, b - a) / np.dot(b - a, b - a), 0, 1)
        return float(np.hypot(*(p - (a + t * (b - a)))))

    got = clearances(ws, pts)
    for p, c in zip(pts, got):
        inside = 4 < p[0] < 5 and 4 < p[1] < 5
        expected = 0.0 if inside else min(seg_dist(p, a, b) for a, b in segments)
        assert c == pytest.approx(expected, abs=1e-9)


def test_clearance_inside_obstacle_is_zero():
    assert point_clearance(with_square(), (4.5, 4.5)) == 0.0


def test_clearance_outside_bounds_raises(empty_room):
    with pytest.raises(ValueError):
        point_clearance(empty_room, (11, 5))


# ---------- validity ----------

def test_config_valid_cases(empty_room):
    robot = Robot(id=0, radius=0.4, v_max=1.0)
    assert config_valid(empty_room, robot, (5, 5))
    assert not config_valid(empty_room, robot, (0.2, 5))
    assert not config_valid(empty_room, robot, (-1, 5))


def test_config_valid_at_exact_radius_clearance():
    robot = Robot(id=0, radius=0.5, v_max=1.0)
    assert config_valid(with_square(), robot, (3.5, 4.5))


def test_local_path_valid_cases():
    ws = with_square()
    robot = Robot(id=0, radius=0.4, v_max=1.0)
    assert local_path_valid(ws, robot, (2, 2), (2, 2), 0.1)
    assert not local_path_valid(ws, robot, (2, 4.5), (8, 4.5), 0.1)
    # passes below the square at clearance exactly 0.5 at the closest samples
    assert local_path_valid(ws, Robot(id=1, radius=0.5, v_max=1.0), (2, 3.5), (7, 3.5), 0.25)


def test_local_path_rejects_non_positive_resolution(empty_room):
    with pytest.raises(ValueError):
        local_path_valid(empty_room, Robot(0, 0.4, 1.0), (1, 1), (2, 2), 0.0)


def test_segment_clearance_is_exact_past_a_corner():
    ws = with_square()
    # both endpoints are 1.5 away; the middle passes the corner (5, 5)
    out = segment_clearances(ws, [(4.5, 6.5)], [(6.5, 4.5)])
    assert out[0] == pytest.approx(math.sqrt(0.5))
    assert clearances(ws, [(4.5, 6.5), (6.5, 4.5)]) == pytest.approx([1.5, 1.5])


def test_segment_clearance_cases():
    ws = with_square()
    out = segment_clearances(
        ws,
        [(2.0, 4.5), (2.0, 3.5), (3.0, 4.5), (4.5, 4.5), (1.0, 1.0)],
        [(8.0, 4.5), (7.0, 3.5), (3.0, 4.5), (4.5, 8.0), (-1.0, 1.0)],
    )
    assert out[0] == 0.0                        # crosses the square
    assert out[1] == pytest.approx(0.5)         # runs parallel below it
    assert out[2] == pytest.approx(1.0)         # degenerate segment is a point
    assert out[3] == 0.0                        # starts inside the square
    assert out[4] == 0.0                        # leaves the bounds


def test_robots_collide_is_strict():
    a, b = Robot(0, 0.4, 1.0), Robot(1, 0.4, 1.0)
    assert not robots_collide(a, (0, 0), b, (1.0, 0))
    assert robots_collide(a, (0, 0), b, (0.79, 0))
    assert not robots_collide(a, (0, 0), b, (0.8, 0))


# ---------- car dynamics ----------

def test_integrate_straight_line():
    x, y, theta, v = integrate(car(), (0, 0, 0, 1), (0, 0), 1.0)
    assert (x, y, theta, v) == pytest.approx((1.0, 0.0, 0.0, 1.0))


def test_integrate_constant_acceleration_is_exact():
    x, _, _, v = integrate(car(), (0, 0, 0, 0), (1, 0), 1.0)
    assert x == pytest.approx(0.5, abs=1e-12)
    assert v == pytest.approx(1.0)


def test_integrate_heading_rate_matches_fine_euler():
    robot = car(wheelbase=1.0, steer_max=0.6)
    steer, dt = 0.3, 0.05
    _, _, theta, _ = integrate(robot, (0, 0, 0, 1), (0, steer), dt)
    # Euler oracle at 1e-5 s steps; speed is constant so heading grows linearly
    h = 1e-5
    euler = 0.0
    for _ in range(round(dt / h)):
        euler += h * math.tan(steer)
    assert theta == pytest.approx(euler, abs=1e-6)


def test_integrate_rejects_out_of_bounds_control():
    with pytest.raises(ValueError):
        integrate(car(a_max=1.0), (0, 0, 0, 0), (1.5, 0), 0.1)


def test_integrate_rejects_holonomic_robot():
    with pytest.raises(ValueError):
        integrate(Robot(0, 0.25, 1.0), (0, 0, 0, 0), (0, 0), 0.1)


def test_speed_is_clamped_to_v_max():
    _, _, _, v = integrate(car(v_max=1.0), (0, 0, 0, 0.95), (1, 0), 1.0)
    assert v == pytest.approx(1.0)


def test_brake_to_stop_ends_at_rest():
    robot = car()
    controls, states = brake_to_stop(robot, (0, 0, 0, 1.0), 0.1)
    assert len(controls) == len(states) > 0
    assert abs(states[-1][3]) <= 1e-9
    assert states[-1][0] > 0


def test_brake_to_stop_when_already_stopped():
    assert brake_to_stop(car(), (1, 1, 0, 0), 0.1) == ([], [])


def test_normalize_angle_range():
    assert normalize_angle(math.pi) == pytest.approx(math.pi)
    assert normalize_angle(-math.pi) == pytest.approx(math.pi)
    assert normalize_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


# ---------- types ----------

def test_composite_configuration_orders_by_robot_id():
    cc = CompositeConfiguration.from_mapping({3: (1, 1), 1: (0, 0)})
    assert cc.group == (1, 3)
    assert cc.config_of(3) == (1.0, 1.0)
    assert cc.as_array().shape == (2, 2)


def test_composite_configuration_rejects_unsorted_group():
    with pytest.raises(ValueError):
        CompositeConfiguration(group=(2, 1), configs=((0, 0), (1, 1)))


def test_workspace_rejects_obstacle_outside_bounds():
    with pytest.raises(ValueError):
        Workspace(bounds=(0, 0, 10, 10), obstacles=(((9, 9), (11, 9), (11, 11)),))


def test_workspace_dict_keeps_obstacles():
    ws = workspace_from_dict(workspace_to_dict(with_square()))
    assert ws.bounds == (0.0, 0.0, 10.0, 10.0)
    assert len(ws.obstacles) == 1
    assert point_clearance(ws, (3, 4.5)) == pytest.approx(1.0)


def test_workspace_file_and_malformed_data(tmp_path):
    path = tmp_path / "ws.json"
    save_workspace(with_square(), path)
    assert point_clearance(load_workspace(path), (3, 4.5)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        workspace_from_dict({"bounds": [0, 0, 10]})
