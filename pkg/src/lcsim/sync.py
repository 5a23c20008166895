"""Client-server synchronization of landmark observation records.

The server owns the authoritative complex. Clients accumulate co-visibility
observations locally, push them in batched requests and receive the
version-ordered insertion records they are missing. Every handled request
counts one unit toward that agent's communication tally no matter how many
observations it carries, which is exactly the cost a policy can trade
against map freshness. Re-delivering the request id last seen from an agent
returns the cached reply without inserting or metering anything, so retries
over a lossy transport are safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .complex import (ComplexError, InsertionDelta, InsertionRecord,
                      LandmarkComplex, VersionError, canonical_simplex)

__all__ = ["SyncError", "UnknownAgentError", "StaleVersionError",
           "MalformedObservationError", "SyncRequest", "SyncDelta",
           "SyncServer", "SyncClient"]


class SyncError(Exception):
    """Base class for sync protocol errors."""


class UnknownAgentError(SyncError):
    """Agent index outside the registered client range."""


class StaleVersionError(SyncError):
    """Client claims a version the server has never issued."""


class MalformedObservationError(SyncError):
    """An observation set is empty or contains invalid ids."""


@dataclass(frozen=True)
class SyncRequest:
    agent: int
    known_version: int
    observations: tuple[tuple[int, ...], ...]
    request_id: int


@dataclass(frozen=True)
class SyncDelta:
    records: tuple[InsertionRecord, ...]
    new_version: int
    complete: bool


class SyncServer:
    """Authoritative map holder; serializes all mutations."""

    def __init__(self, n_agents: int, remaining_ids: Iterable[int],
                 complex_: LandmarkComplex | None = None):
        if n_agents <= 0:
            raise ValueError("n_agents must be > 0")
        self.complex = complex_ if complex_ is not None else LandmarkComplex()
        self.n_agents = n_agents
        self.remaining_ids = frozenset(int(i) for i in remaining_ids)
        self.last_acked_version = [0] * n_agents
        self.comm_counts = [0] * n_agents
        self._obs_counter = [0] * n_agents
        self._last_reply: dict[int, tuple[int, SyncDelta]] = {}

    def completion_check(self) -> bool:
        """True iff every remaining (non-destroyed) landmark is a 0-simplex."""
        vertices = self.complex.vertices()
        return all(i in vertices for i in self.remaining_ids)

    def insert_privileged(self, agent: int, observation_index: int,
                          seen: Iterable[int]) -> InsertionDelta:
        """Trainer-side insertion: attributed to the agent, never metered."""
        if not 0 <= agent < self.n_agents:
            raise UnknownAgentError(f"agent {agent}")
        return self.complex.insert_observation(seen, source_agent=agent,
                                               observation_index=observation_index)

    def handle_sync(self, request: SyncRequest) -> SyncDelta:
        """Insert pushed observations and return the records the client lacks."""
        if not 0 <= request.agent < self.n_agents:
            raise UnknownAgentError(f"agent {request.agent}")
        cached = self._last_reply.get(request.agent)
        if cached is not None and cached[0] == request.request_id:
            return cached[1]
        if not 0 <= request.known_version <= self.complex.version:
            raise StaleVersionError(
                f"known_version {request.known_version} outside "
                f"[0, {self.complex.version}]")
        validated = []
        for obs in request.observations:
            if len(obs) == 0:
                raise MalformedObservationError("empty observation set")
            try:
                validated.append(canonical_simplex(obs))
            except ComplexError as exc:
                raise MalformedObservationError(str(exc)) from exc
        # request accepted: one metered unit regardless of payload size
        self.comm_counts[request.agent] += 1
        for obs in validated:
            self.complex.insert_observation(
                obs, source_agent=request.agent,
                observation_index=self._obs_counter[request.agent])
            self._obs_counter[request.agent] += 1
        records = tuple(self.complex.diff_since(request.known_version))
        delta = SyncDelta(records=records, new_version=self.complex.version,
                          complete=self.completion_check())
        self.last_acked_version[request.agent] = self.complex.version
        self._last_reply[request.agent] = (request.request_id, delta)
        return delta


class SyncClient:
    """Local database of one agent: synced complex plus unsent observations."""

    def __init__(self, agent: int, max_dim: int = 2):
        self.agent = agent
        self.complex = LandmarkComplex(max_dim=max_dim)
        self.known_version = 0
        self.pending: list[tuple[tuple[int, ...], int]] = []
        self._next_request_id = 0

    @property
    def pending_count(self) -> int:
        return len(self.pending)

    def known_ids(self) -> set[int]:
        """Ids the agent can label as observed: synced map plus own pending."""
        ids = self.complex.vertices()
        for obs, _ in self.pending:
            ids.update(obs)
        return ids

    def record_observation(self, seen: Iterable[int], observation_index: int) -> None:
        self.pending.append((canonical_simplex(seen), observation_index))

    def make_request(self) -> SyncRequest:
        req = SyncRequest(
            agent=self.agent,
            known_version=self.known_version,
            observations=tuple(obs for obs, _ in self.pending),
            request_id=self._next_request_id,
        )
        self._next_request_id += 1
        return req

    def apply_delta(self, delta: SyncDelta, sent_observations: int | None = None) -> None:
        """Replay a server delta; rejects gapped or out-of-order records."""
        if delta.records and delta.records[0].version != self.known_version + 1:
            raise VersionError(
                f"delta starts at {delta.records[0].version}, "
                f"client knows {self.known_version}")
        self.complex.apply_records(delta.records)
        self.known_version = delta.new_version
        drop = len(self.pending) if sent_observations is None else sent_observations
        del self.pending[:drop]

    def sync(self, server: SyncServer) -> SyncDelta:
        """In-process request/response round trip."""
        sent = len(self.pending)
        delta = server.handle_sync(self.make_request())
        self.apply_delta(delta, sent_observations=sent)
        return delta
