"""Deterministic discrete-time 2-D world with disk agents and a grid sensor.

The arena is a rectangle with axis-aligned rectangular obstacles, point
landmarks and holonomic disk agents. Motion integrates one Euler step and
resolves obstacle/boundary contact by axis-separated clamping (agents slide
along walls, never penetrate). The omni-directional sensor renders a
range/resolution-limited one-hot occupancy grid of four object types plus
the id set of landmarks in line of sight.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "WorldError",
    "ActionCountError",
    "SpawnError",
    "WorldConfig",
    "Obstacle",
    "AgentState",
    "LandmarkInstance",
    "Action",
    "SensorReading",
    "World",
    "CH_AGENT",
    "CH_OBSERVED",
    "CH_UNOBSERVED",
    "CH_OBSTACLE",
    "segment_blocked",
    "segments_blocked",
]

# sensor channels (one-hot, highest priority first)
CH_AGENT = 0
CH_OBSERVED = 1
CH_UNOBSERVED = 2
CH_OBSTACLE = 3


class WorldError(Exception):
    """Base class for simulation errors."""


class ActionCountError(WorldError):
    """step() received a wrong number of actions."""


class SpawnError(WorldError):
    """Rejection sampling could not find free poses."""


@dataclass(frozen=True, slots=True)
class WorldConfig:
    width: float = 200.0
    height: float = 200.0
    dt: float = 0.1
    agent_radius: float = 0.5
    v_max: float = 2.0
    w_max: float = math.pi
    sensor_radius: float = 15.0
    sensor_resolution: float = 1.0
    occlusion: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("width", "height", "dt", "agent_radius", "v_max",
                     "sensor_radius", "sensor_resolution"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.sensor_radius < self.sensor_resolution:
            raise ValueError("sensor_radius must be >= sensor_resolution")
        if self.v_max * self.dt >= self.sensor_radius:
            raise ValueError("v_max*dt must stay below the sensor radius")

    @property
    def grid_half_cells(self) -> int:
        return int(math.floor(self.sensor_radius / self.sensor_resolution))

    @property
    def grid_size(self) -> int:
        return 2 * self.grid_half_cells + 1


@dataclass(frozen=True, slots=True)
class Obstacle:
    """Axis-aligned rectangle, (x, y) is the lower-left corner."""

    x: float
    y: float
    w: float
    h: float

    def contains_point(self, px: float, py: float) -> bool:
        # half-open cells keep grid memberships unambiguous on shared edges
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h

    def distance_to_point(self, px: float, py: float) -> float:
        dx = max(self.x - px, 0.0, px - (self.x + self.w))
        dy = max(self.y - py, 0.0, py - (self.y + self.h))
        return math.hypot(dx, dy)

    def overlaps(self, other: "Obstacle") -> bool:
        return (self.x < other.x + other.w and other.x < self.x + self.w
                and self.y < other.y + other.h and other.y < self.y + self.h)


@dataclass(slots=True)
class AgentState:
    x: float
    y: float
    theta: float = 0.0
    alive: bool = True

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(slots=True)
class LandmarkInstance:
    id: int
    x: float
    y: float
    destroyed: bool = False


@dataclass(frozen=True, slots=True)
class Action:
    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0
    communicate: bool = False


@dataclass(slots=True)
class SensorReading:
    """One-hot occupancy grid plus the ids of landmarks in line of sight.

    grid[row, col, channel] covers the resolution-sized square centred at
    agent + ((col-K)*q, (row-K)*q) with K = floor(d/q); cells whose centre
    lies outside the inscribed disk are zero in every channel.
    """

    grid: np.ndarray
    visible_ids: frozenset[int]


def _wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def segment_blocked(p: tuple[float, float], q: tuple[float, float],
                    obstacle: Obstacle) -> bool:
    """True iff the closed segment p->q meets the open rectangle interior.

    Touching an edge or grazing a corner does not block (open-interior rule).
    """
    px, py = p
    dx, dy = q[0] - px, q[1] - py
    lo0, hi0 = obstacle.x, obstacle.x + obstacle.w
    lo1, hi1 = obstacle.y, obstacle.y + obstacle.h
    tmin, tmax = 0.0, 1.0
    for pos, d, lo, hi in ((px, dx, lo0, hi0), (py, dy, lo1, hi1)):
        if d == 0.0:
            if not (lo < pos < hi):
                return False
        else:
            ta, tb = (lo - pos) / d, (hi - pos) / d
            if ta > tb:
                ta, tb = tb, ta
            tmin = max(tmin, ta)
            tmax = min(tmax, tb)
    return tmin < tmax


def segments_blocked(origin: tuple[float, float], targets: np.ndarray,
                     obstacles: Sequence[Obstacle]) -> np.ndarray:
    """Vectorized `segment_blocked` from one origin to ``targets`` (n, 2).

    One broadcast slab test over targets x obstacles; rectangles outside the
    bounding box of all segments are dropped first since no segment can
    reach them.
    """
    n = len(targets)
    blocked = np.zeros(n, dtype=bool)
    if n == 0 or not obstacles:
        return blocked
    px, py = origin
    tx = np.ascontiguousarray(targets[:, 0], dtype=float)
    ty = np.ascontiguousarray(targets[:, 1], dtype=float)
    bx0, bx1 = min(px, tx.min()), max(px, tx.max())
    by0, by1 = min(py, ty.min()), max(py, ty.max())
    rel = [ob for ob in obstacles
           if ob.x < bx1 and ob.x + ob.w > bx0
           and ob.y < by1 and ob.y + ob.h > by0]
    if not rel:
        return blocked
    lox = np.array([ob.x for ob in rel])
    hix = np.array([ob.x + ob.w for ob in rel])
    loy = np.array([ob.y for ob in rel])
    hiy = np.array([ob.y + ob.h for ob in rel])
    dx = (tx - px)[:, None]
    dy = (ty - py)[:, None]
    nzx, nzy = dx != 0.0, dy != 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        tax, tbx = (lox - px) / dx, (hix - px) / dx
        tay, tby = (loy - py) / dy, (hiy - py) / dy
    # an axis-parallel segment is constrained by the other axis only and is
    # feasible iff it runs strictly inside this axis' slab
    feas = ((nzx | ((lox < px) & (px < hix)))
            & (nzy | ((loy < py) & (py < hiy))))
    tmin = np.maximum(np.where(nzx, np.minimum(tax, tbx), 0.0),
                      np.where(nzy, np.minimum(tay, tby), 0.0))
    tmax = np.minimum(np.where(nzx, np.maximum(tax, tbx), 1.0),
                      np.where(nzy, np.maximum(tay, tby), 1.0))
    np.maximum(tmin, 0.0, out=tmin)
    np.minimum(tmax, 1.0, out=tmax)
    return (feas & (tmin < tmax)).any(axis=1)


class World:
    """Simulation state for one episode; single-threaded by construction."""

    def __init__(self, config: WorldConfig, obstacles: Iterable[Obstacle] = (),
                 landmarks: Iterable[LandmarkInstance] = ()):
        self.config = config
        self.obstacles: list[Obstacle] = list(obstacles)
        for ob in self.obstacles:
            if (ob.x < 0 or ob.y < 0 or ob.x + ob.w > config.width
                    or ob.y + ob.h > config.height):
                raise WorldError(f"obstacle leaves the arena: {ob}")
        self.landmarks: list[LandmarkInstance] = list(landmarks)
        self.agents: list[AgentState] = []
        self.rng = np.random.default_rng(config.rng_seed)
        # lazy caches over the landmark list; reset via set_landmarks()
        self._landmark_xy: tuple[np.ndarray, np.ndarray] | None = None
        self._landmark_index: dict[int, LandmarkInstance] | None = None

    # ------------------------------------------------------------------
    # construction helpers

    def landmark_by_id(self, lid: int) -> LandmarkInstance:
        if self._landmark_index is None:
            self._landmark_index = {lm.id: lm for lm in self.landmarks}
        return self._landmark_index[lid]

    def set_landmarks(self, landmarks: Iterable[LandmarkInstance]) -> None:
        self.landmarks = list(landmarks)
        self._landmark_xy = None
        self._landmark_index = None

    def spawn_agents(self, n: int, rng: np.random.Generator | None = None,
                     max_attempts: int = 20000) -> list[AgentState]:
        """Rejection-sample n collision-free, non-overlapping agent poses."""
        rng = self.rng if rng is None else rng
        cfg = self.config
        r = cfg.agent_radius
        placed: list[AgentState] = []
        attempts = 0
        while len(placed) < n:
            if attempts >= max_attempts:
                raise SpawnError(f"could not place {n} agents in {max_attempts} attempts")
            attempts += 1
            x = rng.uniform(r, cfg.width - r)
            y = rng.uniform(r, cfg.height - r)
            if any(ob.distance_to_point(x, y) < r for ob in self.obstacles):
                continue
            if any((a.x - x) ** 2 + (a.y - y) ** 2 < (2.2 * r) ** 2 for a in placed):
                continue
            theta = rng.uniform(-math.pi, math.pi)
            placed.append(AgentState(x=x, y=y, theta=theta))
        self.agents = placed
        return placed

    # ------------------------------------------------------------------
    # kinematics

    def _disk_free(self, x: float, y: float) -> bool:
        cfg = self.config
        r = cfg.agent_radius
        if not (r <= x <= cfg.width - r and r <= y <= cfg.height - r):
            return False
        return all(ob.distance_to_point(x, y) >= r - 1e-12 for ob in self.obstacles)

    def _clamp_axis(self, moving: float, fixed: float, target: float,
                    axis: int) -> float:
        """Clamp a single-axis move so the agent disk never enters a rectangle.

        axis 0 moves x at height ``fixed``; axis 1 moves y at abscissa
        ``fixed``. Returns the admissible coordinate closest to ``target``.
        """
        cfg = self.config
        r = cfg.agent_radius
        limit = (cfg.width, cfg.height)[axis]
        new = min(max(target, r), limit - r)
        for _ in range(4):  # successive obstacles may tighten the clamp
            changed = False
            for ob in self.obstacles:
                if axis == 0:
                    lo, hi = ob.x, ob.x + ob.w
                    plo, phi = ob.y, ob.y + ob.h
                else:
                    lo, hi = ob.y, ob.y + ob.h
                    plo, phi = ob.x, ob.x + ob.w
                perp = min(max(fixed, plo), phi) - fixed
                if abs(perp) >= r:
                    continue
                span = math.sqrt(r * r - perp * perp)
                if not (lo - span < new < hi + span):
                    continue
                clamped = lo - span if moving <= (lo + hi) / 2.0 else hi + span
                if clamped != new:
                    new = clamped
                    changed = True
            if not changed:
                break
        if (new - moving) * (target - moving) < 0:  # never clamp past the start
            new = moving
        return new

    def step(self, actions: Sequence[Action | None]) -> list[tuple[AgentState, bool]]:
        """Advance one tick; returns (state, collision_flag) per agent.

        Collision flags report whether the *unclamped* motion would have hit
        an obstacle, the boundary, or another agent; resolved positions slide
        along contacts and never penetrate.
        """
        cfg = self.config
        if len(actions) != len(self.agents):
            raise ActionCountError(
                f"got {len(actions)} actions for {len(self.agents)} agents")
        n = len(self.agents)
        prev = [(a.x, a.y) for a in self.agents]
        proposed: list[tuple[float, float]] = []
        clamped_v: list[tuple[float, float, float]] = []
        for agent, action in zip(self.agents, actions):
            if not agent.alive or action is None:
                proposed.append((agent.x, agent.y))
                clamped_v.append((0.0, 0.0, 0.0))
                continue
            vx = min(max(action.vx, -cfg.v_max), cfg.v_max)
            vy = min(max(action.vy, -cfg.v_max), cfg.v_max)
            wz = min(max(action.wz, -cfg.w_max), cfg.w_max)
            proposed.append((agent.x + vx * cfg.dt, agent.y + vy * cfg.dt))
            clamped_v.append((vx, vy, wz))

        flags = [False] * n
        for i, agent in enumerate(self.agents):
            if not agent.alive:
                continue
            px, py = proposed[i]
            r = cfg.agent_radius
            if not (r <= px <= cfg.width - r and r <= py <= cfg.height - r):
                flags[i] = True
            elif any(ob.distance_to_point(px, py) < r for ob in self.obstacles):
                flags[i] = True
            for j in range(n):
                if j != i and self.agents[j].alive:
                    qx, qy = proposed[j]
                    if (px - qx) ** 2 + (py - qy) ** 2 < (2 * r) ** 2:
                        flags[i] = True

        # axis-separated obstacle/boundary resolution
        resolved: list[tuple[float, float]] = []
        for i, agent in enumerate(self.agents):
            if not agent.alive:
                resolved.append((agent.x, agent.y))
                continue
            nx_ = self._clamp_axis(agent.x, agent.y, proposed[i][0], axis=0)
            ny_ = self._clamp_axis(agent.y, nx_, proposed[i][1], axis=1)
            resolved.append((nx_, ny_))

        resolved = self._separate_agents(resolved, prev)

        out: list[tuple[AgentState, bool]] = []
        for i, agent in enumerate(self.agents):
            if agent.alive:
                agent.x, agent.y = resolved[i]
                if clamped_v[i][2] != 0.0:
                    agent.theta = _wrap_angle(agent.theta + clamped_v[i][2] * cfg.dt)
            out.append((agent, flags[i]))
        return out

    def _separate_agents(self, positions: list[tuple[float, float]],
                         prev: list[tuple[float, float]]) -> list[tuple[float, float]]:
        """Push overlapping agent disks apart without creating penetrations."""
        cfg = self.config
        r = cfg.agent_radius
        pos = [list(p) for p in positions]
        alive = [a.alive for a in self.agents]
        n = len(pos)
        for _ in range(12):
            moved = False
            for i in range(n):
                if not alive[i]:
                    continue
                for j in range(i + 1, n):
                    if not alive[j]:
                        continue
                    dx = pos[j][0] - pos[i][0]
                    dy = pos[j][1] - pos[i][1]
                    dist = math.hypot(dx, dy)
                    if dist >= 2 * r:
                        continue
                    if dist < 1e-12:
                        ux, uy = 1.0, 0.0  # coincident centres: split along x
                    else:
                        ux, uy = dx / dist, dy / dist
                    push = (2 * r - dist) / 2.0 + 1e-9
                    for k, sgn in ((i, -1.0), (j, 1.0)):
                        cand = (pos[k][0] + sgn * ux * push, pos[k][1] + sgn * uy * push)
                        if self._disk_free(*cand):
                            pos[k][0], pos[k][1] = cand
                        # else: keep in place, the partner's push resolves it
                    moved = True
            if not moved:
                break
        # fallback: revert later-indexed members of any still-overlapping pair
        for i in range(n):
            for j in range(i + 1, n):
                if alive[i] and alive[j]:
                    dx = pos[j][0] - pos[i][0]
                    dy = pos[j][1] - pos[i][1]
                    if dx * dx + dy * dy < (2 * r - 1e-9) ** 2:
                        pos[j][0], pos[j][1] = prev[j]
        return [(p[0], p[1]) for p in pos]

    # ------------------------------------------------------------------
    # sensing

    def line_of_sight(self, p: tuple[float, float], q: tuple[float, float]) -> bool:
        """True iff segment p->q meets no obstacle interior (or occlusion is off)."""
        if not self.config.occlusion:
            return True
        return not any(segment_blocked(p, q, ob) for ob in self.obstacles)

    def _live_landmark_array(self) -> tuple[np.ndarray, np.ndarray]:
        if self._landmark_xy is None:
            live = [lm for lm in self.landmarks if not lm.destroyed]
            ids = np.array([lm.id for lm in live], dtype=np.int64)
            xy = np.array([[lm.x, lm.y] for lm in live], dtype=float).reshape(-1, 2)
            self._landmark_xy = (ids, xy)
        return self._landmark_xy

    def visible_landmarks(self, origin: tuple[float, float]) -> list[int]:
        """Ids of live landmarks within sensor range and line of sight."""
        cfg = self.config
        ids, xy = self._live_landmark_array()
        if len(ids) == 0:
            return []
        d2 = (xy[:, 0] - origin[0]) ** 2 + (xy[:, 1] - origin[1]) ** 2
        near = d2 <= cfg.sensor_radius ** 2
        if not near.any():
            return []
        cand_ids = ids[near]
        cand_xy = xy[near]
        if self.config.occlusion and self.obstacles:
            blocked = segments_blocked(origin, cand_xy, self.obstacles)
            cand_ids = cand_ids[~blocked]
        return [int(i) for i in cand_ids]

    def sense(self, agent_index: int, local_observed_ids: Iterable[int] = ()) -> SensorReading:
        """Render the one-hot sensor grid for an agent.

        Landmark cells split into observed/unobserved according to
        ``local_observed_ids`` (the agent's local map knowledge). The heading
        never affects the reading; the sensor is omni-directional.
        """
        cfg = self.config
        agent = self.agents[agent_index]
        if not agent.alive:
            raise WorldError(f"agent {agent_index} is not alive")
        K = cfg.grid_half_cells
        S = cfg.grid_size
        q = cfg.sensor_resolution
        grid = np.zeros((S, S, 4), dtype=np.uint8)
        origin = (agent.x, agent.y)
        observed = set(int(i) for i in local_observed_ids)

        in_disk = self._in_disk_mask()

        # obstacle cells: centre-in-rectangle, never occluded
        if self.obstacles:
            offsets = (np.arange(S) - K) * q
            cx = agent.x + offsets[None, :]
            cy = agent.y + offsets[:, None]
            occ = np.zeros((S, S), dtype=bool)
            for ob in self.obstacles:
                occ |= ((cx >= ob.x) & (cx < ob.x + ob.w)
                        & (cy >= ob.y) & (cy < ob.y + ob.h))
            grid[:, :, CH_OBSTACLE] = (occ & in_disk).astype(np.uint8)

        def cell_of(px: float, py: float) -> tuple[int, int] | None:
            col = K + int(math.floor((px - agent.x) / q + 0.5))
            row = K + int(math.floor((py - agent.y) / q + 0.5))
            if 0 <= row < S and 0 <= col < S and in_disk[row, col]:
                return row, col
            return None

        # landmarks overwrite obstacle cells; the lowest visible id wins a
        # shared cell (distinct grid-placed landmarks never share one)
        visible = self.visible_landmarks(origin)
        for lid in visible:
            lm = self.landmark_by_id(lid)
            cell = cell_of(lm.x, lm.y)
            if cell is None:
                continue
            row, col = cell
            if grid[row, col, CH_OBSERVED] or grid[row, col, CH_UNOBSERVED]:
                continue
            grid[row, col, CH_OBSTACLE] = 0
            grid[row, col, CH_OBSERVED if lid in observed else CH_UNOBSERVED] = 1

        # other agents take precedence over everything in their cell
        for j, other in enumerate(self.agents):
            if j == agent_index or not other.alive:
                continue
            if (other.x - agent.x) ** 2 + (other.y - agent.y) ** 2 > cfg.sensor_radius ** 2:
                continue
            if not self.line_of_sight(origin, (other.x, other.y)):
                continue
            cell = cell_of(other.x, other.y)
            if cell is None:
                continue
            grid[cell[0], cell[1], :] = 0
            grid[cell[0], cell[1], CH_AGENT] = 1

        return SensorReading(grid=grid, visible_ids=frozenset(visible))

    _disk_mask_cache: dict[tuple[int, float, float], np.ndarray] = {}

    def _in_disk_mask(self) -> np.ndarray:
        cfg = self.config
        key = (cfg.grid_size, cfg.sensor_resolution, cfg.sensor_radius)
        mask = World._disk_mask_cache.get(key)
        if mask is None:
            K = cfg.grid_half_cells
            off = (np.arange(cfg.grid_size) - K) * cfg.sensor_resolution
            mask = (off[:, None] ** 2 + off[None, :] ** 2) <= cfg.sensor_radius ** 2
            World._disk_mask_cache[key] = mask
        return mask

    # ------------------------------------------------------------------
    # measures and i/o

    def free_sample_grid(self, resolution: float | None = None
                         ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(xs, ys, free) cell-centre sample grid at the sensor resolution.

        ``free[j, i]`` is True when centre (xs[i], ys[j]) lies in no obstacle.
        """
        cfg = self.config
        res = cfg.sensor_resolution if resolution is None else resolution
        nx_ = int(cfg.width / res)
        ny_ = int(cfg.height / res)
        xs = (np.arange(nx_) + 0.5) * res
        ys = (np.arange(ny_) + 0.5) * res
        free = np.ones((ny_, nx_), dtype=bool)
        for ob in self.obstacles:
            free &= ~((xs[None, :] >= ob.x) & (xs[None, :] < ob.x + ob.w)
                      & (ys[:, None] >= ob.y) & (ys[:, None] < ob.y + ob.h))
        return xs, ys, free

    def occupancy_percentage(self) -> float:
        """Obstacle-union area fraction, measured on the sensor-resolution grid."""
        _, _, free = self.free_sample_grid()
        return float(1.0 - free.mean())

    def to_json(self) -> str:
        doc = {
            "width": self.config.width,
            "height": self.config.height,
            "obstacles": [{"x": ob.x, "y": ob.y, "w": ob.w, "h": ob.h}
                          for ob in self.obstacles],
            "landmarks": [{"id": lm.id, "x": lm.x, "y": lm.y, "destroyed": lm.destroyed}
                          for lm in self.landmarks],
            "seed": self.config.rng_seed,
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str, config: WorldConfig | None = None) -> "World":
        doc = json.loads(text)
        base = config if config is not None else WorldConfig()
        cfg = replace(base, width=doc["width"], height=doc["height"],
                      rng_seed=doc["seed"])
        obstacles = [Obstacle(o["x"], o["y"], o["w"], o["h"]) for o in doc["obstacles"]]
        landmarks = [LandmarkInstance(lm["id"], lm["x"], lm["y"], lm["destroyed"])
                     for lm in doc["landmarks"]]
        return cls(cfg, obstacles=obstacles, landmarks=landmarks)
