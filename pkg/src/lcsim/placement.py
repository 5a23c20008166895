"""Landmark placement by filtration over a shrinking list of sensor radii.

For each radius, largest first, a greedy max-coverage sweep places landmarks
at free grid samples until every free sample has a landmark within that
radius and in line of sight. After the last (smallest) radius the sufficient
landmark condition holds: at least one landmark is observable from every
free point sampled at the given resolution. A destruction step then marks a
random subset unobservable, the sparse-landmark regime.

The greedy argmax is accelerated lazily: an FFT disk convolution gives an
upper bound on each candidate's coverage gain (it ignores occlusion), and
exact visibility gains are only evaluated for candidates that reach the top
of the bound ordering. Gains are submodular, so stale exact values remain
valid bounds and the selected sample is always the true argmax under the
lowest-(y, x) tie rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .world import LandmarkInstance, World, segments_blocked

__all__ = ["PlacementError", "PlacementConfig", "place_landmarks",
           "coverage_check", "destroy_landmarks"]


class PlacementError(Exception):
    """Placement is impossible (e.g. no free space)."""


@dataclass(frozen=True)
class PlacementConfig:
    radii: tuple[float, ...] = (50.0, 23.0, 15.0)
    sample_resolution: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.radii:
            raise ValueError("radii must be non-empty")
        if any(b >= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        if self.sample_resolution <= 0:
            raise ValueError("sample_resolution must be > 0")


def _disk_offsets(radius: float, res: float) -> np.ndarray:
    """Integer (dy, dx) offsets whose sample centres lie within ``radius``."""
    m = int(math.floor(radius / res))
    rng_ = np.arange(-m, m + 1)
    dy, dx = np.meshgrid(rng_, rng_, indexing="ij")
    keep = (dy.astype(float) * res) ** 2 + (dx.astype(float) * res) ** 2 <= radius ** 2
    return np.stack([dy[keep], dx[keep]], axis=1)


def _disk_kernel(radius: float, res: float) -> np.ndarray:
    m = int(math.floor(radius / res))
    rng_ = np.arange(-m, m + 1)
    dy, dx = np.meshgrid(rng_, rng_, indexing="ij")
    return (((dy.astype(float) * res) ** 2 + (dx.astype(float) * res) ** 2)
            <= radius ** 2).astype(float)


class _VisibilityField:
    """Per-radius visibility sets between grid samples, evaluated lazily."""

    def __init__(self, world: World, xs: np.ndarray, ys: np.ndarray,
                 free: np.ndarray, radius: float, res: float):
        self.world = world
        self.xs = xs
        self.ys = ys
        self.free = free
        self.radius = radius
        self.res = res
        self.shape = free.shape
        self.offsets = _disk_offsets(radius, res)
        self._cache: dict[int, np.ndarray] = {}
        self.occlude = world.config.occlusion and bool(world.obstacles)
        # samples whose whole disk is clear of obstacles have trivially
        # unblocked visibility; the convolution bound is exact there
        if self.occlude:
            clear = np.ones(self.shape, dtype=bool)
            for ob in world.obstacles:
                ddx = np.maximum(ob.x - xs, 0.0)
                ddx = np.maximum(ddx, xs - (ob.x + ob.w))
                ddy = np.maximum(ob.y - ys, 0.0)
                ddy = np.maximum(ddy, ys - (ob.y + ob.h))
                clear &= (ddx[None, :] ** 2 + ddy[:, None] ** 2) > radius ** 2
            self.unobstructed = clear
        else:
            self.unobstructed = np.ones(self.shape, dtype=bool)

    def visible_flat(self, idx: int,
                     restrict: np.ndarray | None = None) -> np.ndarray:
        """Flat indices of free samples visible from sample ``idx`` within radius.

        ``restrict`` (a flat boolean mask) narrows the evaluated targets;
        the narrowed result is cached, which is sound for greedy gain
        queries because the caller's uncovered set only ever shrinks.
        Unrestricted calls bypass the cache both ways.
        """
        if restrict is not None:
            cached = self._cache.get(idx)
            if cached is not None:
                return cached
        ny, nx_ = self.shape
        j, i = divmod(idx, nx_)
        rows = self.offsets[:, 0] + j
        cols = self.offsets[:, 1] + i
        ok = (rows >= 0) & (rows < ny) & (cols >= 0) & (cols < nx_)
        rows, cols = rows[ok], cols[ok]
        flat = rows * nx_ + cols
        keep = self.free.ravel()[flat] if restrict is None else restrict[flat]
        rows, cols, flat = rows[keep], cols[keep], flat[keep]
        if self.occlude and not self.unobstructed[j, i]:
            origin = (float(self.xs[i]), float(self.ys[j]))
            targets = np.stack([self.xs[cols], self.ys[rows]], axis=1)
            blocked = segments_blocked(origin, targets, self.world.obstacles)
            flat = flat[~blocked]
        flat = flat.astype(np.int32, copy=False)
        if restrict is not None:
            self._cache[idx] = flat
        return flat


def place_landmarks(world: World, config: PlacementConfig | None = None
                    ) -> list[LandmarkInstance]:
    """Greedy max-coverage filtration over the configured radius list.

    Ids are assigned in placement order starting at 0. The world's landmark
    list is replaced with the result.
    """
    cfg = config or PlacementConfig()
    xs, ys, free = world.free_sample_grid(cfg.sample_resolution)
    if not free.any():
        raise PlacementError("world has no free samples to cover")
    ny, nx_ = free.shape
    free_flat = free.ravel()
    placed: list[int] = []  # flat sample indices, placement order

    for radius in cfg.radii:
        vis = _VisibilityField(world, xs, ys, free, radius, cfg.sample_resolution)
        kernel = _disk_kernel(radius, cfg.sample_resolution)
        covered = np.zeros(ny * nx_, dtype=bool)
        for idx in placed:
            covered[vis.visible_flat(idx)] = True
        uncovered = free_flat & ~covered
        stale = np.full(ny * nx_, np.inf)
        while uncovered.any():
            unc_grid = uncovered.reshape(ny, nx_).astype(float)
            conv = fftconvolve(unc_grid, kernel, mode="same")
            bound = np.rint(conv).ravel()
            bound = np.minimum(bound, stale)
            score = np.where(uncovered, bound, -1.0)
            exact = vis.unobstructed.ravel() & uncovered
            while True:
                best = int(np.argmax(score))  # first max = lowest (y, x)
                if exact[best]:
                    break
                gain = float(uncovered[vis.visible_flat(best, uncovered)].sum())
                stale[best] = gain
                score[best] = gain
                exact[best] = True
            placed.append(best)
            uncovered[vis.visible_flat(best, uncovered)] = False
            uncovered[best] = False  # self-coverage, so every pass terminates

    res = cfg.sample_resolution
    landmarks = []
    for lid, idx in enumerate(placed):
        j, i = divmod(idx, nx_)
        landmarks.append(LandmarkInstance(id=lid, x=float(xs[i]), y=float(ys[j])))
    world.set_landmarks(landmarks)
    return landmarks


def coverage_check(world: World, landmarks: list[LandmarkInstance],
                   radius: float, resolution: float | None = None
                   ) -> list[tuple[float, float]]:
    """Free sample centres with no live landmark in line of sight within ``radius``.

    Independent of the placement bookkeeping: recomputes coverage from
    scratch by sweeping each landmark's visibility disk.
    """
    if radius <= 0:
        raise ValueError("radius must be > 0")
    res = world.config.sensor_resolution if resolution is None else resolution
    xs, ys, free = world.free_sample_grid(res)
    ny, nx_ = free.shape
    covered = np.zeros((ny, nx_), dtype=bool)
    for lm in landmarks:
        if lm.destroyed:
            continue
        dx = xs - lm.x
        dy = ys - lm.y
        near = (dx[None, :] ** 2 + dy[:, None] ** 2) <= radius ** 2
        near &= free & ~covered
        if not near.any():
            continue
        rows, cols = np.nonzero(near)
        if world.config.occlusion and world.obstacles:
            targets = np.stack([xs[cols], ys[rows]], axis=1)
            blocked = segments_blocked((lm.x, lm.y), targets, world.obstacles)
            rows, cols = rows[~blocked], cols[~blocked]
        covered[rows, cols] = True
    missing = free & ~covered
    rows, cols = np.nonzero(missing)
    return [(float(xs[i]), float(ys[j])) for j, i in zip(rows, cols)]


def destroy_landmarks(landmarks: list[LandmarkInstance], p_l: float,
                      rng: np.random.Generator
                      ) -> tuple[list[LandmarkInstance], list[LandmarkInstance]]:
    """Mark each landmark destroyed with probability ``p_l``; returns (kept, destroyed)."""
    if not 0.0 <= p_l <= 1.0:
        raise ValueError("p_l must lie in [0, 1]")
    draws = rng.random(len(landmarks))
    kept: list[LandmarkInstance] = []
    gone: list[LandmarkInstance] = []
    for lm, u in zip(landmarks, draws):
        lm.destroyed = bool(u < p_l)
        (gone if lm.destroyed else kept).append(lm)
    return kept, gone
