"""Scripted exploration policies: frontier dispatch and a random-walk control.

Frontier definition on the shared map: an edge is *boundary* when it bounds at
most one triangle, and a vertex is *frontier* when it is isolated or incident
to a boundary edge. Interior vertices are fully fenced by triangles, so the
frontier is exactly where coverage can still grow.

Policies look up landmark coordinates through the world (beacon positions are
broadcast by the infrastructure), but their map knowledge comes only from the
agent's synchronized local complex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import networkx as nx
import numpy as np

from .complex import LandmarkComplex
from .sync import SyncClient
from .world import CH_OBSTACLE, Action, World

__all__ = ["frontier_vertices", "select_targets", "FrontierPolicy",
           "RandomPolicy"]


def frontier_vertices(cx: LandmarkComplex) -> set[int]:
    """Vertices that are isolated or touch an edge bounding <= 1 triangle."""
    frontier: set[int] = set()
    for v in cx.vertices():
        nbrs = cx.neighbors(v)
        if not nbrs or any(cx.edge_triangle_count((v, u)) <= 1 for u in nbrs):
            frontier.add(v)
    return frontier


def _hop_distances(cx: LandmarkComplex, source: int) -> dict[int, int]:
    graph = cx.skeleton()
    if source not in graph:
        return {}
    return nx.single_source_shortest_path_length(graph, source)


def select_targets(cx: LandmarkComplex,
                   anchors: Sequence[int | None],
                   excluded: Sequence[set[int]],
                   landmark_xy: Mapping[int, tuple[float, float]],
                   ) -> list[int | None]:
    """Assign one frontier vertex per agent.

    Per agent the candidate set is the frontier minus its own exclusions;
    when that empties the agent gets ``None`` (a random-walk directive).
    Preference is fewest hops from the agent's anchor vertex, ties to the
    smaller id; frontier vertices in another component rank after all
    reachable ones, ordered by Euclidean distance. Agents are served in
    index order and a vertex claimed by an earlier agent is skipped while
    unclaimed candidates remain.
    """
    frontier = frontier_vertices(cx)
    claimed: set[int] = set()
    targets: list[int | None] = []
    for agent, anchor in enumerate(anchors):
        if anchor is None or not frontier:
            targets.append(None)
            continue
        candidates = frontier - excluded[agent]
        if not candidates:
            targets.append(None)
            continue
        hops = _hop_distances(cx, anchor)
        ax, ay = landmark_xy[anchor]

        def rank(v: int) -> tuple[int, float, int]:
            if v in hops:
                return (0, float(hops[v]), v)
            vx, vy = landmark_xy[v]
            return (1, math.hypot(vx - ax, vy - ay), v)

        order = sorted(candidates, key=rank)
        pick = next((v for v in order if v not in claimed), order[0])
        claimed.add(pick)
        targets.append(pick)
    return targets


def _ray_clear(grid: np.ndarray, direction: tuple[float, float],
               resolution: float, lookahead: float) -> bool:
    """Sample the obstacle channel along a ray from the grid centre."""
    k = grid.shape[0] // 2
    steps = max(1, int(round(lookahead / (0.5 * resolution))))
    for s in range(1, steps + 1):
        dist = s * 0.5 * resolution
        col = k + int(math.floor(direction[0] * dist / resolution + 0.5))
        row = k + int(math.floor(direction[1] * dist / resolution + 0.5))
        if not (0 <= row < grid.shape[0] and 0 <= col < grid.shape[1]):
            return True
        if grid[row, col, CH_OBSTACLE]:
            return False
    return True


def _steer(grid: np.ndarray, desired: tuple[float, float],
           resolution: float, lookahead: float = 3.0) -> tuple[float, float]:
    """Rotate the desired direction counter-clockwise until the ray is clear.

    The fixed rotation sense walks the agent around obstructions instead of
    oscillating in front of them.
    """
    norm = math.hypot(*desired)
    if norm < 1e-12:
        return (0.0, 0.0)
    d = (desired[0] / norm, desired[1] / norm)
    for i in range(12):
        ang = i * (math.pi / 6.0)
        c, s = math.cos(ang), math.sin(ang)
        cand = (d[0] * c - d[1] * s, d[0] * s + d[1] * c)
        if _ray_clear(grid, cand, resolution, lookahead):
            return cand
    return d


@dataclass
class _AgentMemory:
    visited: set[int] = field(default_factory=set)
    target: int | None = None
    goal: tuple[float, float] | None = None  # overshoot vantage past target
    target_age: int = 0
    heading: float = 0.0
    last_pos: tuple[float, float] | None = None


class _WalkMixin:
    """Ballistic random walk shared by both policies."""

    def _walk_direction(self, mem: _AgentMemory, pos: tuple[float, float],
                        grid: np.ndarray, resolution: float,
                        rng: np.random.Generator, v_step: float) -> tuple[float, float]:
        stalled = (mem.last_pos is not None
                   and math.hypot(pos[0] - mem.last_pos[0],
                                  pos[1] - mem.last_pos[1]) < 0.25 * v_step)
        if mem.last_pos is None or stalled or rng.random() < 0.02:
            mem.heading = rng.uniform(-math.pi, math.pi)
        desired = (math.cos(mem.heading), math.sin(mem.heading))
        out = _steer(grid, desired, resolution)
        mem.heading = math.atan2(out[1], out[0])
        return out


class FrontierPolicy(_WalkMixin):
    """Dispatch each agent to its nearest unexplored frontier vertex.

    Exclusion memory is load-bearing: vertices on the map's outer hull stay
    frontier forever, so without per-agent visited sets the fleet parks on
    the hull and never finishes. A per-target step budget breaks the
    remaining failure mode of unreachable assignments.
    """

    def __init__(self, n_agents: int, seed: int = 0, k_sync: int = 10,
                 c_batch: int = 5, arrive_radius: float = 3.0,
                 target_patience: int = 600):
        self.n_agents = n_agents
        self.k_sync = k_sync
        self.c_batch = c_batch
        self.arrive_radius = arrive_radius
        self.target_patience = target_patience
        self.rng = np.random.default_rng([seed, 0xF2])
        self.memory = [_AgentMemory() for _ in range(n_agents)]

    def _want_comm(self, step: int, client: SyncClient) -> bool:
        return ((step > 0 and step % self.k_sync == 0)
                or client.pending_count >= self.c_batch)

    @staticmethod
    def _vantage(target: int, pos: tuple[float, float], cx: LandmarkComplex,
                 landmark_xy, world: World) -> tuple[float, float]:
        """Point past the target, pointing away from the known map's bulk.

        Parking exactly on a frontier vertex rarely reveals anything new
        (its surroundings are what made it known); overshooting by most of
        a sensor radius sweeps the unexplored side.
        """
        tx, ty = landmark_xy[target]
        known = [landmark_xy[v] for v in cx.vertices() if v in landmark_xy]
        cx_ = sum(p[0] for p in known) / len(known)
        cy_ = sum(p[1] for p in known) / len(known)
        dx, dy = tx - cx_, ty - cy_
        norm = math.hypot(dx, dy)
        if norm < 1e-9:
            dx, dy = tx - pos[0], ty - pos[1]
            norm = math.hypot(dx, dy)
            if norm < 1e-9:
                dx, dy, norm = 1.0, 0.0, 1.0
        reach = 0.8 * world.config.sensor_radius
        margin = world.config.agent_radius
        gx = min(max(tx + reach * dx / norm, margin),
                 world.config.width - margin)
        gy = min(max(ty + reach * dy / norm, margin),
                 world.config.height - margin)
        return (gx, gy)

    def act(self, step: int, world: World, readings: Sequence,
            clients: Sequence[SyncClient]) -> list[Action]:
        cfg = world.config
        v_step = cfg.v_max * cfg.dt
        landmark_xy = {lm.id: (lm.x, lm.y) for lm in world.landmarks}

        anchors: list[int | None] = []
        for i in range(self.n_agents):
            known = clients[i].complex.vertices() & landmark_xy.keys()
            if not known or not world.agents[i].alive:
                anchors.append(None)
                continue
            agent = world.agents[i]
            anchors.append(min(
                known,
                key=lambda v: ((landmark_xy[v][0] - agent.x) ** 2
                               + (landmark_xy[v][1] - agent.y) ** 2, v)))

        actions: list[Action | None] = []
        for i in range(self.n_agents):
            mem = self.memory[i]
            agent = world.agents[i]
            if not agent.alive:
                actions.append(None)
                continue
            pos = (agent.x, agent.y)
            grid = readings[i].grid
            cx = clients[i].complex

            target = mem.target
            if target is not None:
                tpos = landmark_xy.get(target)
                arrived = tpos is not None and (
                    math.hypot(tpos[0] - pos[0], tpos[1] - pos[1])
                    <= self.arrive_radius
                    or (mem.goal is not None
                        and math.hypot(mem.goal[0] - pos[0],
                                       mem.goal[1] - pos[1])
                        <= self.arrive_radius))
                if (tpos is None or arrived
                        or mem.target_age >= self.target_patience):
                    if tpos is not None:
                        mem.visited.add(target)  # reached, or gave up on it
                    target = None
                    mem.goal = None
            if target is None and anchors[i] is not None:
                held = {m.target for j, m in enumerate(self.memory)
                        if j != i and m.target is not None}
                picked = select_targets(
                    cx, [anchors[i]], [mem.visited | held], landmark_xy)[0]
                if picked is not None:
                    target = picked
                    mem.target_age = 0
                    mem.goal = self._vantage(picked, pos, cx, landmark_xy,
                                             world)
            mem.target = target

            if target is None or mem.goal is None:
                direction = self._walk_direction(
                    mem, pos, grid, cfg.sensor_resolution, self.rng, v_step)
            else:
                mem.target_age += 1
                # walk the skeleton to the target's neighbourhood, then head
                # for the vantage point just past it
                waypoint = mem.goal
                anchor = anchors[i]
                if anchor is not None and anchor != target:
                    path = cx.hop_path(anchor, target)
                    if (path is not None and len(path) >= 2
                            and path[1] != target):
                        waypoint = landmark_xy[path[1]]
                desired = (waypoint[0] - pos[0], waypoint[1] - pos[1])
                direction = _steer(grid, desired, cfg.sensor_resolution)
            mem.last_pos = pos

            actions.append(Action(vx=direction[0] * cfg.v_max,
                                  vy=direction[1] * cfg.v_max,
                                  wz=0.0,
                                  communicate=self._want_comm(step, clients[i])))
        return actions


class RandomPolicy:
    """Uniform random control: velocities uniform in bounds, comm with p=0.1."""

    def __init__(self, n_agents: int, seed: int = 0, p_comm: float = 0.1):
        self.n_agents = n_agents
        self.p_comm = p_comm
        self.rng = np.random.default_rng([seed, 0xA2])

    def act(self, step: int, world: World, readings: Sequence,
            clients: Sequence[SyncClient]) -> list[Action]:
        cfg = world.config
        actions: list[Action | None] = []
        for i in range(self.n_agents):
            if not world.agents[i].alive:
                actions.append(None)
                continue
            actions.append(Action(
                vx=float(self.rng.uniform(-cfg.v_max, cfg.v_max)),
                vy=float(self.rng.uniform(-cfg.v_max, cfg.v_max)),
                wz=float(self.rng.uniform(-cfg.w_max, cfg.w_max)),
                communicate=bool(self.rng.random() < self.p_comm)))
        return actions
