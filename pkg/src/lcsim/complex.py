"""Abstract simplicial complex over identifiable landmarks.

Vertices are integer landmark ids. Every co-visibility observation of l
landmarks inserts the (l-1)-simplex and all of its faces, truncated at a
configurable maximum dimension (default 2: vertices, edges, triangles).
All mutations are appended to a versioned insertion log so that replicas
can be synchronized by replaying incremental slices of the log.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import networkx as nx

__all__ = [
    "ComplexError",
    "EmptyObservationError",
    "InvalidSimplexError",
    "UnknownVertexError",
    "VersionError",
    "InsertionRecord",
    "InsertionDelta",
    "LandmarkComplex",
    "canonical_simplex",
]


class ComplexError(Exception):
    """Base class for landmark-complex errors."""


class EmptyObservationError(ComplexError):
    """An observation must contain at least one landmark id."""


class InvalidSimplexError(ComplexError):
    """Simplex is not a duplicate-free set of non-negative integer ids."""


class UnknownVertexError(ComplexError):
    """A vertex id is not present in the 0-skeleton."""


class VersionError(ComplexError):
    """A version argument is outside the range of the insertion log."""


@dataclass(frozen=True, slots=True)
class InsertionRecord:
    """One logged simplex insertion.

    ``version`` counts from 1 and increases by exactly 1 per record, so the
    log index of a record is ``version - 1``.
    """

    version: int
    simplex: tuple[int, ...]
    source_agent: int
    observation_index: int

    def to_dict(self) -> dict:
        return {"v": self.version, "s": list(self.simplex),
                "a": self.source_agent, "o": self.observation_index}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "InsertionRecord":
        return cls(version=d["v"], simplex=tuple(d["s"]), source_agent=d["a"],
                   observation_index=d["o"])

    @classmethod
    def from_json(cls, line: str) -> "InsertionRecord":
        return cls.from_dict(json.loads(line))


@dataclass(frozen=True, slots=True)
class InsertionDelta:
    """Newly inserted simplices of one observation, counted by dimension.

    ``new_counts`` is always a 3-tuple (vertices, edges, triangles); higher
    dimensions, when enabled, appear in ``new_simplices`` but are not counted.
    """

    new_counts: tuple[int, int, int]
    new_simplices: tuple[tuple[int, ...], ...]

    @classmethod
    def empty(cls) -> "InsertionDelta":
        return cls((0, 0, 0), ())

    def merged(self, other: "InsertionDelta") -> "InsertionDelta":
        c = tuple(a + b for a, b in zip(self.new_counts, other.new_counts))
        return InsertionDelta(c, self.new_simplices + other.new_simplices)  # type: ignore[arg-type]


def canonical_simplex(vertices: Iterable[int]) -> tuple[int, ...]:
    """Sorted duplicate-free vertex tuple; the only stored simplex form."""
    try:
        vs = sorted({int(v) for v in vertices})
    except (TypeError, ValueError) as exc:
        raise InvalidSimplexError(f"vertex ids must be integers: {exc}") from exc
    if not vs:
        raise InvalidSimplexError("simplex needs at least one vertex")
    if vs[0] < 0:
        raise InvalidSimplexError(f"vertex ids must be non-negative: {vs}")
    return tuple(vs)


class LandmarkComplex:
    """Dimension-capped simplicial complex with a versioned insertion log.

    Insertion keeps the complex closed under taking faces, and the log is a
    faithful replay history: folding it over an empty complex reproduces the
    cell sets exactly.
    """

    def __init__(self, max_dim: int = 2):
        if max_dim < 0:
            raise ValueError("max_dim must be >= 0")
        self.max_dim = max_dim
        self.cells: tuple[set[tuple[int, ...]], ...] = tuple(set() for _ in range(max_dim + 1))
        self.log: list[InsertionRecord] = []
        # Incremental navigation caches: skeleton adjacency and, for frontier
        # detection, the number of stored triangles containing each edge.
        self._adjacency: dict[int, set[int]] = {}
        self._edge_triangles: dict[tuple[int, int], int] = {}

    # ------------------------------------------------------------------
    # mutation

    @property
    def version(self) -> int:
        return len(self.log)

    def insert_observation(self, seen: Iterable[int], source_agent: int = -1,
                           observation_index: int = -1) -> InsertionDelta:
        """Insert every simplex spanned by a co-visibility observation.

        All subsets of ``seen`` with at most ``max_dim + 1`` vertices become
        simplices. Returns the previously absent ones; repeating an insertion
        yields an empty delta.
        """
        seen = list(seen)
        if not seen:
            raise EmptyObservationError("observation contains no landmark ids")
        ids = canonical_simplex(seen)  # raises InvalidSimplexError on bad ids
        counts = [0, 0, 0]
        new: list[tuple[int, ...]] = []
        for size in range(1, min(len(ids), self.max_dim + 1) + 1):
            dim = size - 1
            cell_set = self.cells[dim]
            for simplex in itertools.combinations(ids, size):
                if simplex in cell_set:
                    continue
                cell_set.add(simplex)
                self.log.append(InsertionRecord(len(self.log) + 1, simplex,
                                                source_agent, observation_index))
                new.append(simplex)
                if dim < 3:
                    counts[dim] += 1
                if dim == 0:
                    self._adjacency.setdefault(simplex[0], set())
                elif dim == 1:
                    self._adjacency[simplex[0]].add(simplex[1])
                    self._adjacency[simplex[1]].add(simplex[0])
                    self._edge_triangles.setdefault(simplex, 0)
                elif dim == 2:
                    for edge in itertools.combinations(simplex, 2):
                        self._edge_triangles[edge] = self._edge_triangles.get(edge, 0) + 1
        return InsertionDelta((counts[0], counts[1], counts[2]), tuple(new))

    def apply_records(self, records: Sequence[InsertionRecord]) -> None:
        """Replay a version-ordered log slice (sync path).

        Records must continue the local log contiguously; a gap or overlap is
        rejected before anything is applied.
        """
        expect = self.version + 1
        for rec in records:
            if rec.version != expect:
                raise VersionError(f"record version {rec.version}, expected {expect}")
            expect += 1
        for rec in records:
            simplex = canonical_simplex(rec.simplex)
            dim = len(simplex) - 1
            if dim > self.max_dim:
                raise InvalidSimplexError(f"record exceeds max_dim={self.max_dim}: {simplex}")
            if simplex in self.cells[dim]:
                raise VersionError(f"replayed simplex already present: {simplex}")
            self.cells[dim].add(simplex)
            self.log.append(InsertionRecord(len(self.log) + 1, simplex,
                                            rec.source_agent, rec.observation_index))
            if dim == 0:
                self._adjacency.setdefault(simplex[0], set())
            elif dim == 1:
                self._adjacency[simplex[0]].add(simplex[1])
                self._adjacency[simplex[1]].add(simplex[0])
                self._edge_triangles.setdefault(simplex, 0)
            elif dim == 2:
                for edge in itertools.combinations(simplex, 2):
                    self._edge_triangles[edge] = self._edge_triangles.get(edge, 0) + 1

    # ------------------------------------------------------------------
    # queries

    def contains(self, simplex: Iterable[int]) -> bool:
        s = canonical_simplex(simplex)
        dim = len(s) - 1
        if dim > self.max_dim:
            return False
        return s in self.cells[dim]

    def counts(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cells)

    def vertices(self) -> set[int]:
        return {s[0] for s in self.cells[0]}

    def has_vertex(self, vid: int) -> bool:
        return (vid,) in self.cells[0]

    def neighbors(self, vid: int) -> set[int]:
        if (vid,) not in self.cells[0]:
            raise UnknownVertexError(f"vertex {vid} not in complex")
        return set(self._adjacency.get(vid, ()))

    def degree(self, vid: int) -> int:
        return len(self._adjacency.get(vid, ()))

    def edge_triangle_count(self, edge: tuple[int, int]) -> int:
        """Number of stored triangles having ``edge`` as a face."""
        a, b = edge
        return self._edge_triangles.get((a, b) if a <= b else (b, a), 0)

    def skeleton(self) -> nx.Graph:
        """Undirected navigation graph: nodes = 0-simplices, edges = 1-simplices."""
        g = nx.Graph()
        g.add_nodes_from(s[0] for s in self.cells[0])
        g.add_edges_from(self.cells[1])
        return g

    def hop_path(self, source: int, target: int) -> list[int] | None:
        """Breadth-first shortest path on the skeleton, or None across components.

        Among equally short paths the one advancing through the smallest
        vertex id at every hop is returned.
        """
        for v in (source, target):
            if (v,) not in self.cells[0]:
                raise UnknownVertexError(f"vertex {v} not in complex")
        if source == target:
            return [source]
        # distance-to-target field, then greedy descent picking smallest id
        dist = {target: 0}
        queue = deque([target])
        while queue:
            u = queue.popleft()
            for w in self._adjacency.get(u, ()):
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if source not in dist:
            return None
        path = [source]
        current = source
        while current != target:
            step = dist[current] - 1
            current = min(w for w in self._adjacency[current] if dist.get(w, -1) == step)
            path.append(current)
        return path

    def diff_since(self, version: int) -> list[InsertionRecord]:
        """Log records with version strictly greater than ``version``."""
        if version < 0 or version > self.version:
            raise VersionError(f"version {version} outside [0, {self.version}]")
        return self.log[version:]

    # ------------------------------------------------------------------
    # serialization: the log is the wire form, cells are derived

    def iter_jsonl(self) -> Iterator[str]:
        for rec in self.log:
            yield rec.to_json()

    def to_jsonl(self) -> str:
        return "".join(line + "\n" for line in self.iter_jsonl())

    @classmethod
    def from_jsonl(cls, text: str, max_dim: int = 2) -> "LandmarkComplex":
        cx = cls(max_dim=max_dim)
        records = [InsertionRecord.from_json(line)
                   for line in text.splitlines() if line.strip()]
        cx.apply_records(records)
        return cx
