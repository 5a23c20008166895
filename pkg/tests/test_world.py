"""World dynamics, collision resolution, occlusion, and the sensor grid."""

import math

import numpy as np
import pytest

from lcsim import (
    CH_AGENT,
    CH_OBSERVED,
    CH_OBSTACLE,
    CH_UNOBSERVED,
    Action,
    ActionCountError,
    AgentState,
    LandmarkInstance,
    Obstacle,
    World,
    WorldConfig,
    WorldError,
    segment_blocked,
    segments_blocked,
)

from oracles import exact_blocked, exact_segment_hits_rect

R = WorldConfig().agent_radius  # 0.5


def make_world(width=100.0, height=100.0, obstacles=(), landmarks=(),
               agents=(), **cfg):
    world = World(WorldConfig(width=width, height=height, **cfg),
                  obstacles=obstacles, landmarks=landmarks)
    world.agents = [AgentState(x=x, y=y, theta=th) for x, y, th in agents]
    return world


# ---------------------------------------------------------------------------
# kinematics


def test_velocity_clamp_exact():
    w = make_world(agents=[(10.0, 10.0, 0.0)])
    (agent, hit), = w.step([Action(vx=5.0, vy=-3.0, wz=10.0)])
    # v clamps to (2, -2), omega to pi; dt = 0.1
    assert agent.x == pytest.approx(10.2, abs=1e-12)
    assert agent.y == pytest.approx(9.8, abs=1e-12)
    assert agent.theta == pytest.approx(math.pi * 0.1, abs=1e-12)
    assert not hit


def test_in_range_velocity_not_clamped():
    w = make_world(agents=[(10.0, 10.0, 0.0)])
    (agent, hit), = w.step([Action(vx=-1.0, vy=0.5)])
    assert (agent.x, agent.y) == (pytest.approx(9.9), pytest.approx(10.05))
    assert not hit


def test_heading_wraps():
    w = make_world(agents=[(10.0, 10.0, math.pi - 0.01)])
    (agent, _), = w.step([Action(wz=math.pi)])  # +0.1*pi
    assert -math.pi < agent.theta <= math.pi
    assert agent.theta == pytest.approx(-math.pi + (0.1 * math.pi - 0.01))


def test_boundary_clamp_and_flag():
    w = make_world(agents=[(99.4, 50.0, 0.0)])
    (agent, hit), = w.step([Action(vx=2.0)])
    assert agent.x == pytest.approx(100.0 - R)
    assert hit  # unclamped proposal leaves the arena


def test_none_action_and_dead_agent_hold_position():
    w = make_world(agents=[(10.0, 10.0, 0.3), (20.0, 20.0, 0.0)])
    w.agents[1].alive = False
    results = w.step([None, Action(vx=2.0)])
    assert (w.agents[0].x, w.agents[0].y) == (10.0, 10.0)
    assert w.agents[0].theta == 0.3
    assert (w.agents[1].x, w.agents[1].y) == (20.0, 20.0)
    assert not results[0][1] and not results[1][1]


def test_action_count_mismatch_raises():
    w = make_world(agents=[(10.0, 10.0, 0.0)])
    with pytest.raises(ActionCountError):
        w.step([Action(), Action()])


def test_obstacle_touch_is_allowed_penetration_is_not():
    ob = Obstacle(5.0, 5.0, 2.0, 2.0)
    w = make_world(obstacles=[ob], agents=[(4.3, 6.0, 0.0)])
    (agent, hit), = w.step([Action(vx=2.0)])
    assert agent.x == pytest.approx(4.5)  # exactly touching the left wall
    assert not hit
    (agent, hit), = w.step([Action(vx=2.0)])
    assert agent.x == pytest.approx(4.5)  # clamped
    assert hit


def test_slide_along_wall():
    ob = Obstacle(5.0, 5.0, 2.0, 2.0)
    w = make_world(obstacles=[ob], agents=[(4.4, 6.0, 0.0)])
    (agent, hit), = w.step([Action(vx=2.0, vy=2.0)])
    assert agent.x == pytest.approx(4.5)   # x blocked at the wall
    assert agent.y == pytest.approx(6.2)   # y motion preserved
    assert hit


def test_no_penetration_fuzz():
    rng = np.random.default_rng(42)
    obstacles = [Obstacle(20, 20, 15, 10), Obstacle(50, 40, 8, 30),
                 Obstacle(10, 60, 30, 6), Obstacle(70, 10, 12, 12)]
    w = make_world(obstacles=obstacles)
    w.spawn_agents(4, rng=rng)
    for _ in range(300):
        acts = [Action(vx=float(rng.uniform(-3, 3)),
                       vy=float(rng.uniform(-3, 3)),
                       wz=float(rng.uniform(-4, 4))) for _ in range(4)]
        w.step(acts)
        for a in w.agents:
            assert R - 1e-9 <= a.x <= w.config.width - R + 1e-9
            assert R - 1e-9 <= a.y <= w.config.height - R + 1e-9
            for ob in obstacles:
                assert ob.distance_to_point(a.x, a.y) >= R - 1e-9
        for i in range(4):
            for j in range(i + 1, 4):
                d = math.hypot(w.agents[i].x - w.agents[j].x,
                               w.agents[i].y - w.agents[j].y)
                assert d >= 2 * R - 2e-9


def test_head_on_agents_separate_and_flag():
    w = make_world(agents=[(10.0, 10.0, 0.0), (11.2, 10.0, 0.0)])
    results = w.step([Action(vx=2.0), Action(vx=-2.0)])
    assert results[0][1] and results[1][1]
    d = math.hypot(w.agents[0].x - w.agents[1].x,
                   w.agents[0].y - w.agents[1].y)
    assert d >= 2 * R - 2e-9


def test_collision_flag_reports_unclamped_proposal():
    # resolved position is legal (slide), flag still set
    ob = Obstacle(5.0, 5.0, 2.0, 2.0)
    w = make_world(obstacles=[ob], agents=[(4.45, 6.0, 0.0)])
    (agent, hit), = w.step([Action(vx=2.0)])
    assert ob.distance_to_point(agent.x, agent.y) >= R - 1e-12
    assert hit


def test_spawn_agents_free_and_separated():
    obstacles = [Obstacle(30, 30, 40, 40)]
    w = make_world(obstacles=obstacles)
    placed = w.spawn_agents(8, rng=np.random.default_rng(5))
    assert len(placed) == 8
    for a in placed:
        assert obstacles[0].distance_to_point(a.x, a.y) >= R
    for i in range(8):
        for j in range(i + 1, 8):
            assert math.hypot(placed[i].x - placed[j].x,
                              placed[i].y - placed[j].y) >= 2 * R


# ---------------------------------------------------------------------------
# occlusion


def test_segment_blocked_handcrafted():
    ob = Obstacle(5.0, 5.0, 2.0, 2.0)
    assert segment_blocked((4.0, 6.0), (8.0, 6.0), ob)      # straight through
    assert not segment_blocked((4.0, 4.0), (8.0, 4.0), ob)  # below
    assert not segment_blocked((4.0, 5.0), (8.0, 5.0), ob)  # grazing an edge
    assert not segment_blocked((5.0, 3.0), (5.0, 9.0), ob)  # along a wall
    assert segment_blocked((4.0, 4.0), (6.0, 6.0), ob)      # diagonal, enters
    assert segment_blocked((6.0, 6.0), (6.0, 6.0), ob)      # point inside
    assert not segment_blocked((5.0, 5.0), (5.0, 5.0), ob)  # point on corner
    assert segment_blocked((6.0, 4.0), (6.0, 6.0), ob)      # endpoint inside
    # corner graze: the line y = x + 2 only touches the rect at (5, 7)
    assert not segment_blocked((4.0, 6.0), (6.0, 8.0), ob)
    assert not exact_segment_hits_rect(4, 6, 6, 8, 5, 5, 2, 2)


def test_segment_blocked_fuzz_vs_exact_oracle():
    rng = np.random.default_rng(9)
    for _ in range(500):
        ob = Obstacle(float(rng.uniform(0, 8)), float(rng.uniform(0, 8)),
                      float(rng.uniform(0.5, 4)), float(rng.uniform(0.5, 4)))
        p = (float(rng.uniform(0, 12)), float(rng.uniform(0, 12)))
        if rng.random() < 0.15:  # axis-parallel and degenerate segments
            q = (p[0], float(rng.uniform(0, 12))) if rng.random() < 0.5 \
                else (float(rng.uniform(0, 12)), p[1])
            if rng.random() < 0.2:
                q = p
        else:
            q = (float(rng.uniform(0, 12)), float(rng.uniform(0, 12)))
        expect = exact_segment_hits_rect(p[0], p[1], q[0], q[1],
                                         ob.x, ob.y, ob.w, ob.h)
        assert segment_blocked(p, q, ob) == expect, (p, q, ob)


def test_segments_blocked_matches_scalar_and_oracle():
    rng = np.random.default_rng(10)
    for _ in range(60):
        obstacles = [Obstacle(float(rng.uniform(0, 30)), float(rng.uniform(0, 30)),
                              float(rng.uniform(0.5, 8)), float(rng.uniform(0.5, 8)))
                     for _ in range(int(rng.integers(0, 5)))]
        origin = (float(rng.uniform(0, 36)), float(rng.uniform(0, 36)))
        targets = rng.uniform(0, 36, size=(int(rng.integers(1, 30)), 2))
        if rng.random() < 0.2 and len(targets):
            targets[0] = origin  # degenerate segment
        got = segments_blocked(origin, targets, obstacles)
        for k, (txy, g) in enumerate(zip(targets, got)):
            scalar = any(segment_blocked(origin, tuple(txy), ob)
                         for ob in obstacles)
            exact = exact_blocked(origin[0], origin[1], txy[0], txy[1], obstacles)
            assert bool(g) == scalar == exact, (origin, txy, obstacles, k)


def test_line_of_sight_respects_occlusion_toggle():
    ob = Obstacle(5.0, 5.0, 2.0, 2.0)
    w = make_world(obstacles=[ob])
    assert not w.line_of_sight((4.0, 6.0), (8.0, 6.0))
    w_off = World(WorldConfig(width=100, height=100, occlusion=False),
                  obstacles=[ob])
    assert w_off.line_of_sight((4.0, 6.0), (8.0, 6.0))


# ---------------------------------------------------------------------------
# sensing


def test_grid_geometry_constants():
    cfg = WorldConfig()
    assert cfg.grid_half_cells == 15
    assert cfg.grid_size == 31


def test_sense_landmark_cells_and_channels():
    lms = [LandmarkInstance(0, 53.0, 54.0), LandmarkInstance(1, 50.0, 40.0),
           LandmarkInstance(2, 90.0, 90.0)]
    w = make_world(landmarks=lms, agents=[(50.0, 50.0, 0.0)])
    reading = w.sense(0, local_observed_ids=[1])
    assert reading.grid.shape == (31, 31, 4)
    assert reading.grid.dtype == np.uint8
    assert reading.visible_ids == {0, 1}  # landmark 2 is out of range
    # landmark 0 at offset (+3, +4): row 15+4, col 15+3, not yet observed
    assert reading.grid[19, 18, CH_UNOBSERVED] == 1
    # landmark 1 at offset (0, -10), known: observed channel
    assert reading.grid[5, 15, CH_OBSERVED] == 1
    assert reading.grid[5, 15, CH_UNOBSERVED] == 0


def test_sense_one_hot_and_disk_support():
    lms = [LandmarkInstance(i, 45.0 + i, 52.0) for i in range(6)]
    w = make_world(obstacles=[Obstacle(55.0, 47.0, 6.0, 2.0)], landmarks=lms,
                   agents=[(50.0, 50.0, 0.0), (52.0, 50.0, 1.0)])
    grid = w.sense(0).grid
    assert grid.sum(axis=2).max() <= 1  # one-hot per cell
    k = 15
    off = np.arange(31) - k
    outside = (off[:, None] ** 2 + off[None, :] ** 2) > k ** 2
    assert grid[outside].sum() == 0


def test_sense_range_boundary_inclusive():
    lms = [LandmarkInstance(0, 65.0, 50.0),   # exactly sensor_radius away
           LandmarkInstance(1, 65.001, 50.0)]
    w = make_world(landmarks=lms, agents=[(50.0, 50.0, 0.0)])
    reading = w.sense(0)
    assert reading.visible_ids == {0}
    assert reading.grid[15, 30, CH_UNOBSERVED] == 1


def test_sense_occlusion_hides_landmark_but_not_obstacle_cells():
    ob = Obstacle(53.0, 48.0, 2.0, 4.0)
    lms = [LandmarkInstance(7, 60.0, 50.0)]
    w = make_world(obstacles=[ob], landmarks=lms, agents=[(50.0, 50.0, 0.0)])
    reading = w.sense(0)
    assert reading.visible_ids == frozenset()
    assert reading.grid[:, :, CH_UNOBSERVED].sum() == 0
    # obstacle cells render regardless of what they occlude
    assert reading.grid[13, 18, CH_OBSTACLE] == 1  # centre (53, 48) in rect


def test_sense_destroyed_landmark_invisible():
    lms = [LandmarkInstance(0, 53.0, 50.0, destroyed=True)]
    w = make_world(landmarks=lms, agents=[(50.0, 50.0, 0.0)])
    assert w.sense(0).visible_ids == frozenset()


def test_sense_other_agent_marks_agent_channel():
    w = make_world(agents=[(50.0, 50.0, 0.0), (54.0, 50.0, 2.0)])
    grid = w.sense(0).grid
    assert grid[15, 19, CH_AGENT] == 1
    # the sensing agent does not mark its own centre cell
    assert grid[15, 15].sum() == 0


def test_sense_heading_inert():
    lms = [LandmarkInstance(0, 47.0, 55.0)]
    w = make_world(landmarks=lms,
                   agents=[(50.0, 50.0, 0.0)])
    g0 = w.sense(0).grid.copy()
    w.agents[0].theta = 2.5
    assert np.array_equal(w.sense(0).grid, g0)


def test_sense_dead_agent_raises_and_is_unseen():
    w = make_world(agents=[(50.0, 50.0, 0.0), (54.0, 50.0, 0.0)])
    w.agents[1].alive = False
    with pytest.raises(WorldError):
        w.sense(1)
    assert w.sense(0).grid[15, 19].sum() == 0


def test_visible_landmarks_sorted_by_construction_order():
    lms = [LandmarkInstance(3, 51.0, 50.0), LandmarkInstance(1, 52.0, 50.0)]
    w = make_world(landmarks=lms, agents=[(50.0, 50.0, 0.0)])
    assert w.visible_landmarks((50.0, 50.0)) == [3, 1]


# ---------------------------------------------------------------------------
# measures and serialization


def test_free_sample_grid_and_occupancy():
    w = make_world(obstacles=[Obstacle(10.0, 10.0, 10.0, 10.0)])
    xs, ys, free = w.free_sample_grid()
    assert xs.shape == (100,) and ys.shape == (100,) and free.shape == (100, 100)
    assert not free[15, 15]        # (15.5, 15.5) inside
    assert free[15, 25]            # (25.5, 15.5) outside
    assert w.occupancy_percentage() == pytest.approx(0.01)


def test_world_json_round_trip():
    w = make_world(obstacles=[Obstacle(1.0, 2.0, 3.0, 4.0)],
                   landmarks=[LandmarkInstance(0, 5.0, 6.0),
                              LandmarkInstance(1, 7.0, 8.0, destroyed=True)])
    clone = World.from_json(w.to_json())
    assert clone.config.width == 100.0 and clone.config.height == 100.0
    assert clone.obstacles == w.obstacles
    assert clone.landmarks == w.landmarks


def test_obstacle_outside_arena_rejected():
    with pytest.raises(WorldError):
        make_world(obstacles=[Obstacle(95.0, 0.0, 10.0, 5.0)])


def test_config_validation():
    with pytest.raises(ValueError):
        WorldConfig(dt=0.0)
    with pytest.raises(ValueError):
        WorldConfig(sensor_radius=0.5, sensor_resolution=1.0)
