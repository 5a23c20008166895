"""Reward engine vs. first-principles recomputation."""

import numpy as np
import pytest

from lcsim import DEFAULT_WEIGHTS, InsertionDelta, RewardWeights, step_rewards

from oracles import recompute_rewards


def test_default_weights():
    w = DEFAULT_WEIGHTS
    assert (w.alpha, w.beta) == (1.5, 2.0)
    assert (w.r_comm, w.r_coll) == (-2.0, -5.0)
    assert (w.r_comp, w.r_t) == (5000.0, -0.2)


def test_weight_validation():
    with pytest.raises(ValueError):
        RewardWeights(alpha=0.0)
    with pytest.raises(ValueError):
        RewardWeights(r_comm=1.0)
    with pytest.raises(ValueError):
        RewardWeights(r_comp=-1.0)


def test_discovery_weighting_exact():
    # 2 vertices + 3 edges + 1 triangle = 2 + 1.5*3 + 2*1 = 8.5
    delta = InsertionDelta((2, 3, 1), ())
    b = step_rewards([delta], [False], [False], completed=False)
    assert b.r_s == (8.5,)
    assert b.agent_totals == (8.5,)
    assert b.group_total == -0.2


def test_penalties_and_bonus_land_on_the_right_channel():
    b = step_rewards([None, InsertionDelta.empty()], [True, False],
                     [False, True], completed=True)
    assert b.r_s == (0.0, 0.0)
    assert b.comm_penalty == (-2.0, 0.0)
    assert b.coll_penalty == (0.0, -5.0)
    assert b.agent_totals == (-2.0, -5.0)
    assert b.completion_bonus == 5000.0
    assert b.group_total == 5000.0 - 0.2
    assert b.time_penalty == -0.2


def test_misaligned_inputs_raise():
    with pytest.raises(ValueError):
        step_rewards([None], [True, False], [False], completed=False)


def test_randomized_scenarios_match_recomputation():
    rng = np.random.default_rng(99)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        weights = RewardWeights(
            alpha=float(rng.uniform(0.1, 4.0)),
            beta=float(rng.uniform(0.1, 4.0)),
            r_comm=-float(rng.uniform(0.0, 5.0)),
            r_coll=-float(rng.uniform(0.0, 10.0)),
            r_comp=float(rng.uniform(1.0, 9000.0)),
            r_t=-float(rng.uniform(0.0, 1.0)),
        )
        counts = [None if rng.random() < 0.2 else
                  (int(rng.integers(0, 5)), int(rng.integers(0, 8)),
                   int(rng.integers(0, 6)))
                  for _ in range(n)]
        deltas = [None if c is None else InsertionDelta(c, ()) for c in counts]
        comm = [bool(rng.random() < 0.4) for _ in range(n)]
        coll = [bool(rng.random() < 0.3) for _ in range(n)]
        completed = bool(rng.random() < 0.1)
        got = step_rewards(deltas, comm, coll, completed, weights)
        want_agents, want_group = recompute_rewards(
            counts, comm, coll, completed, weights.alpha, weights.beta,
            weights.r_comm, weights.r_coll, weights.r_comp, weights.r_t)
        assert got.agent_totals == want_agents  # exact float equality
        assert got.group_total == want_group
