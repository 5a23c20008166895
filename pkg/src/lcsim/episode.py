"""Episode orchestration: the sense/act/sync/reward loop and its CSV log.

One loop iteration is ``sense -> policy -> step -> sync -> rewards -> log``.
Senses happen at the top of the iteration, so the discovery rewards paid at
step k stem from the positions reached by step k-1; this is the usual
environment convention where a step result carries this step's rewards and
the next observation.

Observation registration is gated by movement: a reading is queued (and
counts toward ``obs_count``) only when it sees at least one landmark and the
agent has moved at least ``obs_gate`` (default 1 m, one sensor cell) since
its previous registered reading. The first qualifying reading always counts.
Stationary agents therefore contribute one observation, not one per tick,
which keeps observation counts comparable across policies of different
speeds.

Discovery crediting is centralized by default: each registered reading is
inserted into the server's complex immediately, attributed to the observing
agent, and the agent's reward delta is what that insertion added. Agents are
processed in index order, so simultaneous discoveries credit exactly one
agent. ``crediting="local"`` switches the reward delta to the agent's own
database (synced map plus own history) instead; the server still ingests
everything so completion and logged counts are unchanged by the ablation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .complex import InsertionDelta, LandmarkComplex
from .curriculum import EpisodeConfig
from .placement import PlacementConfig, destroy_landmarks, place_landmarks
from .rewards import DEFAULT_WEIGHTS, RewardBreakdown, RewardWeights, step_rewards
from .sync import SyncClient, SyncServer
from .world import Action, SensorReading, World, WorldConfig

__all__ = ["MAX_EPISODE_STEPS", "Policy", "StepResult", "EpisodeLog",
           "EpisodeRunner", "build_world", "run_episode"]

MAX_EPISODE_STEPS = 20000


class Policy(Protocol):
    def act(self, step: int, world: World, readings: Sequence[SensorReading],
            clients: Sequence[SyncClient]) -> list[Action]: ...


@dataclass(frozen=True)
class StepResult:
    readings: tuple[SensorReading, ...]
    agent_rewards: tuple[float, ...]
    group_reward: float
    done: bool
    truncated: bool
    info: dict


class EpisodeLog:
    """Per-step CSV rows; cumulative columns are non-decreasing."""

    def __init__(self, n_agents: int, episode: int = 0):
        self.n_agents = n_agents
        self.episode = episode
        self.rows: list[list] = []

    @property
    def header(self) -> list[str]:
        return (["episode", "step", "obs_count", "c0", "c1", "c2",
                 "comm_total", "collisions", "reward_group"]
                + [f"reward_agent_{i}" for i in range(self.n_agents)])

    def append(self, step: int, obs_count: int, counts: tuple[int, int, int],
               comm_total: int, collisions: int,
               breakdown: RewardBreakdown) -> None:
        self.rows.append(
            [self.episode, step, obs_count, *counts, comm_total, collisions,
             breakdown.group_total, *breakdown.agent_totals])

    def write(self, stream) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(self.header)
        writer.writerows(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write(buf)
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write(fh)


def build_world(config: EpisodeConfig, n_agents: int,
                arena: tuple[float, float] = (200.0, 200.0),
                placement: PlacementConfig | None = None,
                world_config: WorldConfig | None = None,
                ) -> tuple[World, np.random.Generator]:
    """Realize an episode: obstacles, beacon placement, dropout, spawn.

    Placement is deterministic given the map; the destruction draw uses the
    episode's landmark seed and agent spawn uses the world seed, so episodes
    regenerate bit-identically from their config.
    """
    if world_config is None:
        world_config = WorldConfig(width=arena[0], height=arena[1])
    world = World(world_config, obstacles=list(config.obstacles))
    place_landmarks(world, placement or PlacementConfig())
    rng_destroy = np.random.default_rng(config.landmark_seed)
    destroy_landmarks(world.landmarks, config.p_l, rng_destroy)
    rng_world = np.random.default_rng(config.world_seed)
    world.spawn_agents(n_agents, rng_world)
    return world, rng_world


class EpisodeRunner:
    """Stepwise episode driver shared by the CLI loop and the wire gateway."""

    def __init__(self, world: World, weights: RewardWeights = DEFAULT_WEIGHTS,
                 crediting: str = "global", obs_gate: float | None = None,
                 max_steps: int = MAX_EPISODE_STEPS, episode: int = 0):
        if crediting not in ("global", "local"):
            raise ValueError(f"unknown crediting mode {crediting!r}")
        self.world = world
        self.weights = weights
        self.crediting = crediting
        self.obs_gate = (world.config.sensor_resolution
                         if obs_gate is None else float(obs_gate))
        self.max_steps = max_steps
        n = len(world.agents)
        if n == 0:
            raise ValueError("world has no agents")
        self.n_agents = n
        remaining = [lm.id for lm in world.landmarks if not lm.destroyed]
        self.server = SyncServer(n, remaining)
        self.clients = [SyncClient(i) for i in range(n)]
        self._credit_cx = [LandmarkComplex() for _ in range(n)]
        self._last_reg_pos: list[tuple[float, float] | None] = [None] * n
        self._obs_index = [0] * n
        self.obs_count = 0
        self.collisions = 0
        self.step_index = 0
        self.done = False
        self.truncated = False
        self._completed = False
        self.log = EpisodeLog(n, episode=episode)
        self._pending_deltas: list[InsertionDelta] | None = None
        self._started = False

    # -- observation phase -------------------------------------------------

    def register_observation(self, agent: int, reading: SensorReading) -> bool:
        """Queue a reading if it sees landmarks and the movement gate passes."""
        if not reading.visible_ids:
            return False
        state = self.world.agents[agent]
        prev = self._last_reg_pos[agent]
        if prev is not None:
            dx, dy = state.x - prev[0], state.y - prev[1]
            if dx * dx + dy * dy < self.obs_gate ** 2:
                return False
        self._last_reg_pos[agent] = (state.x, state.y)
        self.clients[agent].record_observation(
            reading.visible_ids, self._obs_index[agent])
        self._obs_index[agent] += 1
        self.obs_count += 1
        return True

    def _sense_all(self) -> tuple[tuple[SensorReading, ...], list[InsertionDelta]]:
        readings = []
        deltas = []
        for i in range(self.n_agents):
            if not self.world.agents[i].alive:
                readings.append(None)
                deltas.append(InsertionDelta.empty())
                continue
            reading = self.world.sense(i, self.clients[i].known_ids())
            readings.append(reading)
            if self.register_observation(i, reading):
                obs_idx = self._obs_index[i] - 1
                global_delta = self.server.insert_privileged(
                    i, obs_idx, reading.visible_ids)
                if self.crediting == "local":
                    deltas.append(self._credit_cx[i].insert_observation(
                        reading.visible_ids))
                else:
                    deltas.append(global_delta)
            else:
                deltas.append(InsertionDelta.empty())
        return tuple(readings), deltas

    # -- wire-facing API ----------------------------------------------------

    def reset(self) -> tuple[tuple[SensorReading, ...], dict]:
        """Initial sense. Degenerate maps with nothing left to find finish here."""
        if self._started:
            raise RuntimeError("episode already started")
        self._started = True
        readings, deltas = self._sense_all()
        self._pending_deltas = deltas
        if self.server.completion_check():
            # nothing left to discover: grant completion before any action
            self._completed = True
            self.done = True
            breakdown = step_rewards(
                deltas, [False] * self.n_agents, [False] * self.n_agents,
                True, self.weights)
            self.log.append(0, self.obs_count, self.server.complex.counts(),
                            sum(self.server.comm_counts), self.collisions,
                            breakdown)
            self._pending_deltas = None
        return readings, self.info()

    def info(self) -> dict:
        c0, c1, c2 = self.server.complex.counts()
        return {"obs_count": self.obs_count, "c0": c0, "c1": c1, "c2": c2,
                "comm_counts": list(self.server.comm_counts),
                "collisions": self.collisions, "step_index": self.step_index,
                "done": self.done, "truncated": self.truncated}

    def step(self, actions: Sequence[Action | None]) -> StepResult:
        """Advance one iteration; returns this step's rewards and next readings."""
        if not self._started:
            raise RuntimeError("reset() must run before step()")
        if self.done or self.truncated:
            raise RuntimeError("episode is over")
        if len(actions) != self.n_agents:
            raise ValueError(f"expected {self.n_agents} actions")
        self.step_index += 1
        sense_deltas = self._pending_deltas
        assert sense_deltas is not None

        results = self.world.step(actions)
        collided = [flag for _, flag in results]
        self.collisions += sum(collided)

        communicated = [False] * self.n_agents
        for i, action in enumerate(actions):
            if action is None or not self.world.agents[i].alive:
                continue
            if action.communicate:
                delta = self.clients[i].sync(self.server)
                communicated[i] = True
                if self.crediting == "local":
                    for rec in delta.records:
                        self._credit_cx[i].insert_observation(rec.simplex)

        completed_now = (not self._completed) and self.server.completion_check()
        if completed_now:
            self._completed = True
            self.done = True
        elif self.step_index >= self.max_steps:
            self.truncated = True

        breakdown = step_rewards(sense_deltas, communicated, collided,
                                 completed_now, self.weights)
        self.log.append(self.step_index, self.obs_count,
                        self.server.complex.counts(),
                        sum(self.server.comm_counts), self.collisions,
                        breakdown)

        info = self.info()
        if self.done or self.truncated:
            readings: tuple = tuple([None] * self.n_agents)
            self._pending_deltas = None
        else:
            readings, self._pending_deltas = self._sense_all()
        return StepResult(readings=readings,
                          agent_rewards=breakdown.agent_totals,
                          group_reward=breakdown.group_total,
                          done=self.done, truncated=self.truncated,
                          info=info)

    def kill_agent(self, agent: int) -> None:
        """Drop a disconnected agent; the episode continues without it."""
        self.world.agents[agent].alive = False


def run_episode(runner: EpisodeRunner, policy: Policy) -> EpisodeLog:
    readings, info = runner.reset()
    while not (runner.done or runner.truncated):
        actions = policy.act(runner.step_index + 1, runner.world, readings,
                             runner.clients)
        result = runner.step(actions)
        readings = result.readings
    return runner.log
