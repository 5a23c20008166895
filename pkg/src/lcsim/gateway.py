"""Line-oriented JSON services: the environment loop and the sync server.

One TCP connection (or a stdio pipe) hosts one session. Environment sessions
run sequential episodes — ``reset`` builds a fresh world, ``act`` advances
it — and sync sessions expose a shared authoritative complex to any number
of concurrent connections. All responses are canonical frames from
:mod:`.wire`, so recorded transcripts replay byte-for-byte.
"""

from __future__ import annotations

import logging
import socketserver
import sys
import threading
from typing import Callable

import numpy as np

from . import wire
from .curriculum import EpisodeConfig, _derive_seed, sample_obstacles
from .episode import MAX_EPISODE_STEPS, EpisodeRunner, build_world
from .sync import (MalformedObservationError, StaleVersionError, SyncRequest,
                   SyncServer, UnknownAgentError)
from .world import Action, WorldConfig

__all__ = ["GatewayError", "EnvSession", "SyncSession", "handle_line",
           "serve_tcp", "serve_stdio"]

logger = logging.getLogger(__name__)


class GatewayError(Exception):
    def __init__(self, code: str, detail: str = ""):
        super().__init__(detail or code)
        self.code = code


def _field(msg: dict, key: str, kind, default=None, required: bool = False):
    if key not in msg:
        if required:
            raise GatewayError("bad_request", f"missing field {key!r}")
        return default
    value = msg[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not None and not isinstance(value, kind):
        raise GatewayError("bad_request", f"field {key!r} has wrong type")
    return value


class EnvSession:
    """Sequential episode driver behind the wire protocol."""

    def __init__(self, crediting: str = "global"):
        self.crediting = crediting
        self.runner: EpisodeRunner | None = None
        self._readings = None
        self.closed = False
        self._episode = 0

    def handle(self, msg: dict) -> dict:
        t = msg.get("t")
        if t == "reset":
            return self._reset(msg)
        if t == "act":
            return self._act(msg)
        if t == "close":
            self.closed = True
            return {"t": "bye"}
        raise GatewayError("unknown_type", f"t={t!r}")

    def _reset(self, msg: dict) -> dict:
        seed = _field(msg, "seed", int, required=True)
        stage = _field(msg, "stage", int, default=1)
        n_agents = _field(msg, "n_agents", int, default=3)
        p_l = _field(msg, "p_l", float, default=0.0)
        n_obstacles = _field(msg, "n_obstacles", int, default=0)
        width = _field(msg, "width", float, default=200.0)
        height = _field(msg, "height", float, default=200.0)
        max_steps = _field(msg, "max_steps", int, default=MAX_EPISODE_STEPS)
        if n_agents <= 0 or not 0.0 <= p_l <= 1.0 or n_obstacles < 0:
            raise GatewayError("bad_request", "parameter out of range")
        # obstacle size bounds scale with the arena (a tenth to a quarter of
        # the width, a quarter to a half of the height, as on the 200 m arena)
        rng_obst = np.random.default_rng([seed, 1])
        obstacles = sample_obstacles(
            n_obstacles, (width, height),
            (0.10 * width, 0.25 * width), (0.25 * height, 0.50 * height),
            rng_obst)
        config = EpisodeConfig(
            stage=stage, episode_index=self._episode,
            n_obstacles=n_obstacles, p_l=p_l, obstacles=tuple(obstacles),
            world_seed=_derive_seed(seed, 3), landmark_seed=_derive_seed(seed, 2))
        world, _ = build_world(config, n_agents, arena=(width, height))
        self.runner = EpisodeRunner(world, crediting=self.crediting,
                                    max_steps=max_steps, episode=self._episode)
        self._episode += 1
        readings, info = self.runner.reset()
        self._readings = readings
        return {"t": "obs", "grids": self._encode_readings(readings),
                "info": info}

    def _act(self, msg: dict) -> dict:
        if self.runner is None:
            raise GatewayError("no_episode")
        if self.runner.done or self.runner.truncated:
            raise GatewayError("episode_done")
        raw = _field(msg, "actions", list, required=True)
        if len(raw) != self.runner.n_agents:
            raise GatewayError("bad_request",
                               f"expected {self.runner.n_agents} actions")
        actions: list[Action | None] = []
        for item in raw:
            if item is None:
                actions.append(None)  # disconnected agent keeps idling
                continue
            if not isinstance(item, dict):
                raise GatewayError("bad_request", "action must be object/null")
            actions.append(Action(
                vx=float(_field(item, "vx", (int, float), required=True)),
                vy=float(_field(item, "vy", (int, float), required=True)),
                wz=float(_field(item, "wz", (int, float), default=0.0)),
                communicate=bool(_field(item, "comm", bool, default=False))))
        result = self.runner.step(actions)
        grids = (None if result.done or result.truncated
                 else self._encode_readings(result.readings))
        return {"t": "stepres", "rewards": list(result.agent_rewards),
                "group": result.group_reward, "done": result.done,
                "trunc": result.truncated, "grids": grids,
                "info": result.info}

    @staticmethod
    def _encode_readings(readings) -> list:
        return [None if r is None else wire.encode_grid(r.grid)
                for r in readings]


class SyncSession:
    """One connection's view of a shared, lock-serialized sync server."""

    def __init__(self, server: SyncServer, lock: threading.Lock):
        self.server = server
        self.lock = lock
        self.closed = False

    def handle(self, msg: dict) -> dict:
        t = msg.get("t")
        if t == "sync":
            return self._sync(msg)
        if t == "close":
            self.closed = True
            return {"t": "bye"}
        raise GatewayError("unknown_type", f"t={t!r}")

    def _sync(self, msg: dict) -> dict:
        agent = _field(msg, "agent", int, required=True)
        ver = _field(msg, "ver", int, required=True)
        obs = _field(msg, "obs", list, required=True)
        rid = _field(msg, "rid", int, required=True)
        observations = []
        for item in obs:
            if not isinstance(item, list):
                raise GatewayError("malformed_observation",
                                   "observation must be a list of ids")
            observations.append(tuple(item))
        request = SyncRequest(agent=agent, known_version=ver,
                              observations=tuple(observations),
                              request_id=rid)
        try:
            with self.lock:
                delta = self.server.handle_sync(request)
        except UnknownAgentError as exc:
            raise GatewayError("unknown_agent", str(exc)) from exc
        except StaleVersionError as exc:
            raise GatewayError("stale_version", str(exc)) from exc
        except MalformedObservationError as exc:
            raise GatewayError("malformed_observation", str(exc)) from exc
        return {"t": "delta", "recs": [r.to_dict() for r in delta.records],
                "ver": delta.new_version, "complete": delta.complete}


def handle_line(session, line: str) -> str:
    """Dispatch one frame; every failure maps to a deterministic err frame."""
    try:
        msg = wire.loads(line)
    except wire.WireError:
        return wire.dumps({"t": "err", "code": "bad_json"})
    try:
        return wire.dumps(session.handle(msg))
    except GatewayError as exc:
        if exc.code not in ("unknown_type",):
            logger.debug("request rejected: %s (%s)", exc.code, exc)
        return wire.dumps({"t": "err", "code": exc.code})
    except Exception:
        logger.exception("unhandled error while serving request")
        return wire.dumps({"t": "err", "code": "internal"})


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self):
        session = self.server.session_factory()  # type: ignore[attr-defined]
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            response = handle_line(session, line)
            self.wfile.write(response.encode("utf-8") + b"\n")
            self.wfile.flush()
            if session.closed:
                break


class _ThreadingServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def serve_tcp(session_factory: Callable[[], object], host: str = "127.0.0.1",
              port: int = 0) -> _ThreadingServer:
    """Start a threaded line server; returns it (serve_forever on caller)."""
    server = _ThreadingServer((host, port), _LineHandler)
    server.session_factory = session_factory  # type: ignore[attr-defined]
    return server


def serve_stdio(session, stdin=None, stdout=None) -> None:
    """Serve one session over a pipe; returns when the peer closes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        stdout.write(handle_line(session, line) + "\n")
        stdout.flush()
        if session.closed:
            break
