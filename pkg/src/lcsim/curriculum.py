"""Three-stage curriculum: per-episode obstacle counts and destruction rates.

Stage 1 is obstacle-free with intact landmarks. Stage 2 grows the obstacle
count by one every ``n_o`` episodes. Stage 3 keeps the obstacle ramp and
additionally sweeps the landmark destruction probability from 5% upward in
5% increments every ``n_l`` episodes, resetting to 5% whenever the obstacle
count increments. Everything is a pure function of (seed, stage, episode
index), so schedules replay identically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .world import Obstacle

__all__ = ["ObstacleSamplingError", "CurriculumState", "EpisodeConfig",
           "schedule", "sample_obstacles"]

logger = logging.getLogger(__name__)


class ObstacleSamplingError(Exception):
    """Could not fit the requested obstacles into the arena."""


def schedule(stage: int, episode: int, n_o: int = 25, n_l: int = 5
             ) -> tuple[int, float]:
    """(n_obstacles, p_l) for a 0-based episode index within a stage."""
    if stage not in (1, 2, 3):
        raise ValueError(f"stage must be 1, 2 or 3, got {stage}")
    if episode < 0:
        raise ValueError("episode index must be >= 0")
    if stage == 1:
        return 0, 0.0
    n_obstacles = 1 + episode // n_o
    if stage == 2:
        return n_obstacles, 0.0
    # p_l starts at 5%, +5% every n_l episodes, reset on obstacle increment
    step = 1 + (episode % n_o) // n_l
    return n_obstacles, (5.0 * step) / 100.0


@dataclass(frozen=True)
class EpisodeConfig:
    stage: int
    episode_index: int
    n_obstacles: int
    p_l: float
    obstacles: tuple[Obstacle, ...]
    world_seed: int
    landmark_seed: int


@dataclass
class CurriculumState:
    """Mutable schedule cursor; the owner advances stages explicitly."""

    stage: int = 1
    episode_in_stage: int = 0
    n_o: int = 25
    n_l: int = 5
    w_bounds: tuple[float, float] = (20.0, 50.0)
    h_bounds: tuple[float, float] = (50.0, 100.0)
    arena: tuple[float, float] = (200.0, 200.0)
    sample_resolution: float = 1.0
    rng_seed: int = 0

    def advance_stage(self) -> None:
        if self.stage >= 3:
            raise ValueError("already at the final stage")
        self.stage += 1
        self.episode_in_stage = 0

    def peek_episode_config(self, episode: int | None = None) -> EpisodeConfig:
        """Config for an episode index without advancing the cursor."""
        e = self.episode_in_stage if episode is None else episode
        n_obstacles, p_l = schedule(self.stage, e, self.n_o, self.n_l)
        rng = np.random.default_rng([self.rng_seed, self.stage, e, 0])
        obstacles = sample_obstacles(n_obstacles, self.arena, self.w_bounds,
                                     self.h_bounds, rng,
                                     resolution=self.sample_resolution)
        return EpisodeConfig(
            stage=self.stage,
            episode_index=e,
            n_obstacles=n_obstacles,
            p_l=p_l,
            obstacles=tuple(obstacles),
            world_seed=_derive_seed(self.rng_seed, self.stage, e, 1),
            landmark_seed=_derive_seed(self.rng_seed, self.stage, e, 2),
        )

    def next_episode_config(self) -> EpisodeConfig:
        cfg = self.peek_episode_config()
        self.episode_in_stage += 1
        return cfg


def _derive_seed(*key: int) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


def _free_space_connected(obstacles: list[Obstacle], arena: tuple[float, float],
                          resolution: float) -> bool:
    nx_ = int(arena[0] / resolution)
    ny_ = int(arena[1] / resolution)
    xs = (np.arange(nx_) + 0.5) * resolution
    ys = (np.arange(ny_) + 0.5) * resolution
    free = np.ones((ny_, nx_), dtype=bool)
    for ob in obstacles:
        free &= ~((xs[None, :] >= ob.x) & (xs[None, :] < ob.x + ob.w)
                  & (ys[:, None] >= ob.y) & (ys[:, None] < ob.y + ob.h))
    if not free.any():
        return False
    _, count = ndimage.label(free)
    return count == 1


def sample_obstacles(n: int, arena: tuple[float, float],
                     w_bounds: tuple[float, float],
                     h_bounds: tuple[float, float],
                     rng: np.random.Generator,
                     resolution: float = 1.0,
                     max_layout_attempts: int = 50,
                     max_obstacle_attempts: int = 200) -> list[Obstacle]:
    """n uniform non-overlapping rectangles leaving the free space connected.

    If no connected layout is found within the attempt budget the last
    overlap-free layout is accepted (and logged), since connectivity is a
    quality-of-life constraint rather than a hard geometric one.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return []
    width, height = arena
    if w_bounds[1] > width or h_bounds[1] > height:
        raise ObstacleSamplingError("obstacle bounds exceed the arena")
    fallback: list[Obstacle] | None = None
    for attempt in range(max_layout_attempts):
        layout: list[Obstacle] = []
        for _ in range(n):
            for _ in range(max_obstacle_attempts):
                w = rng.uniform(*w_bounds)
                h = rng.uniform(*h_bounds)
                x = rng.uniform(0.0, width - w)
                y = rng.uniform(0.0, height - h)
                ob = Obstacle(x, y, w, h)
                if not any(ob.overlaps(other) for other in layout):
                    layout.append(ob)
                    break
            else:
                break  # could not fit this obstacle, retry the whole layout
        if len(layout) < n:
            continue
        if _free_space_connected(layout, arena, resolution):
            if attempt > 0:
                logger.debug("obstacle layout accepted after %d retries", attempt)
            return layout
        fallback = layout
    if fallback is not None:
        logger.warning("accepting obstacle layout with disconnected free space "
                       "after %d attempts", max_layout_attempts)
        return fallback
    raise ObstacleSamplingError(
        f"no overlap-free layout of {n} obstacles in {max_layout_attempts} attempts")
