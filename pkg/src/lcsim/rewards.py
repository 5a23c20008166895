"""Five-term exploration reward.

Per step each agent earns a simplex-discovery reward (new vertices plus
weighted new edges and triangles), a communication penalty when it issued a
server request, and a collision penalty when it hit something. The group
channel carries a per-step time penalty plus a one-shot completion bonus on
the step the last remaining landmark enters the map.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .complex import InsertionDelta

__all__ = ["RewardWeights", "RewardBreakdown", "step_rewards", "DEFAULT_WEIGHTS"]


@dataclass(frozen=True, slots=True)
class RewardWeights:
    alpha: float = 1.5
    beta: float = 2.0
    r_comm: float = -2.0
    r_coll: float = -5.0
    r_comp: float = 5000.0
    r_t: float = -0.2

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be > 0")
        if self.r_comm > 0 or self.r_coll > 0 or self.r_t > 0:
            raise ValueError("penalties must be <= 0")
        if self.r_comp <= 0:
            raise ValueError("r_comp must be > 0")

    def discovery_reward(self, counts: tuple[int, int, int]) -> float:
        c0, c1, c2 = counts
        return c0 + self.alpha * c1 + self.beta * c2


DEFAULT_WEIGHTS = RewardWeights()


@dataclass(frozen=True, slots=True)
class RewardBreakdown:
    r_s: tuple[float, ...]
    comm_penalty: tuple[float, ...]
    coll_penalty: tuple[float, ...]
    time_penalty: float
    completion_bonus: float
    agent_totals: tuple[float, ...]
    group_total: float


def step_rewards(deltas: Sequence[InsertionDelta | None],
                 communicated: Sequence[bool],
                 collided: Sequence[bool],
                 completed: bool,
                 weights: RewardWeights = DEFAULT_WEIGHTS) -> RewardBreakdown:
    """Combine one step's events into per-agent and group rewards.

    ``completed`` must be True only on the single step an episode finishes;
    the caller owns that once-per-episode guarantee.
    """
    n = len(deltas)
    if len(communicated) != n or len(collided) != n:
        raise ValueError("deltas, communicated and collided must align")
    r_s = tuple(
        weights.discovery_reward(d.new_counts) if d is not None else 0.0
        for d in deltas)
    comm = tuple(weights.r_comm if c else 0.0 for c in communicated)
    coll = tuple(weights.r_coll if c else 0.0 for c in collided)
    bonus = weights.r_comp if completed else 0.0
    totals = tuple(a + b + c for a, b, c in zip(r_s, comm, coll))
    return RewardBreakdown(
        r_s=r_s,
        comm_penalty=comm,
        coll_penalty=coll,
        time_penalty=weights.r_t,
        completion_bonus=bonus,
        agent_totals=totals,
        group_total=weights.r_t + bonus,
    )
