"""Bounded-degree graphs with a decoupled label universe, and counted query access.

Vertices are identified by their labels (naturals in ``[1, N]``).  Two query
interfaces are exposed through :class:`OracleHandle`:

* ``label_query(i)`` returns the label stored at position ``i`` (1-based) of the
  graph's fixed vertex order (builder insertion order);
* ``neighbor_query(v, r)`` returns the ``r``-th neighbor of ``v`` in
  adjacency-list storage order, or :data:`ABSENT`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import NotFoundError, RangeError, ValidationError

ABSENT = None
MAX_LABEL = 2**63


class Graph:
    """Immutable simple undirected graph with maximum degree ``d``."""

    __slots__ = ("n", "d", "N", "labels", "_adj", "_pos")

    def __init__(
        self,
        labels: Sequence[int],
        adjacency: Sequence[Sequence[int]],
        d: int,
        N: int | None = None,
    ) -> None:
        labels = tuple(int(x) for x in labels)
        if len(adjacency) != len(labels):
            raise ValidationError("adjacency must have one list per label")
        self.n = len(labels)
        self.d = int(d)
        self.N = int(N) if N is not None else max(labels, default=1)
        self.labels = labels
        self._pos = {v: i for i, v in enumerate(labels)}
        self._adj = {v: tuple(int(w) for w in nb) for v, nb in zip(labels, adjacency)}
        self._validate()

    def _validate(self) -> None:
        if self.d < 0:
            raise ValidationError(f"degree bound must be nonnegative, got {self.d}")
        if self.N > MAX_LABEL:
            raise ValidationError(f"N={self.N} exceeds the 2^63 label limit")
        if self.n > self.N:
            raise ValidationError(f"n={self.n} exceeds label universe N={self.N}")
        if len(self._pos) != self.n:
            raise ValidationError("duplicate label")
        for v in self.labels:
            if not 1 <= v <= self.N:
                raise ValidationError(f"label {v} outside [1, {self.N}]")
        for v, nb in self._adj.items():
            if len(nb) > self.d:
                raise ValidationError(f"vertex {v} has degree {len(nb)} > d={self.d}")
            if len(set(nb)) != len(nb):
                raise ValidationError(f"parallel edge at vertex {v}")
            for w in nb:
                if w == v:
                    raise ValidationError(f"self-loop at vertex {v}")
                other = self._adj.get(w)
                if other is None:
                    raise ValidationError(f"vertex {v} lists unknown neighbor {w}")
                if v not in other:
                    raise ValidationError(f"asymmetric adjacency: {v} lists {w} but not conversely")

    @classmethod
    def from_edges(
        cls,
        labels: Sequence[int],
        edges: Iterable[tuple[int, int]],
        d: int,
        N: int | None = None,
    ) -> "Graph":
        adj: dict[int, list[int]] = {v: [] for v in labels}
        for u, v in edges:
            if u not in adj or v not in adj:
                raise ValidationError(f"edge ({u}, {v}) uses an unknown label")
            adj[u].append(v)
            adj[v].append(u)
        return cls(labels, [adj[v] for v in labels], d, N)

    def __contains__(self, v: object) -> bool:
        return v in self._pos

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, d={self.d}, N={self.N}, m={self.num_edges()})"

    def neighbors(self, v: int) -> tuple[int, ...]:
        try:
            return self._adj[v]
        except KeyError:
            raise NotFoundError(f"label {v} is not a vertex") from None

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def index_of(self, v: int) -> int:
        """1-based position of ``v`` in the label-query order."""
        try:
            return self._pos[v] + 1
        except KeyError:
            raise NotFoundError(f"label {v} is not a vertex") from None

    def edges(self) -> Iterator[tuple[int, int]]:
        """Each undirected edge once, as ``(u, v)`` with ``u < v``."""
        for u in self.labels:
            for w in self._adj[u]:
                if u < w:
                    yield (u, w)

    def num_edges(self) -> int:
        return sum(len(nb) for nb in self._adj.values()) // 2

    # -- text format ---------------------------------------------------
    def dumps(self) -> str:
        lines = [f"{self.n} {self.d} {self.N}"]
        for v in self.labels:
            nb = self._adj[v]
            lines.append(" ".join(str(x) for x in (v, len(nb), *nb)))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "Graph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows:
            raise ValidationError("empty graph file")
        try:
            n, d, N = (int(x) for x in rows[0])
        except ValueError:
            raise ValidationError("header must be `n d N`") from None
        body = rows[1:]
        if len(body) != n:
            raise ValidationError(f"header declares n={n} but file has {len(body)} vertex lines")
        labels, adjacency = [], []
        for lineno, row in enumerate(body, start=2):
            try:
                vals = [int(x) for x in row]
            except ValueError:
                raise ValidationError(f"line {lineno}: non-integer token") from None
            if len(vals) < 2 or len(vals) != 2 + vals[1]:
                raise ValidationError(f"line {lineno}: degree field does not match neighbor count")
            labels.append(vals[0])
            adjacency.append(vals[2:])
        return cls(labels, adjacency, d, N)

    @classmethod
    def load(cls, path: str | Path) -> "Graph":
        return cls.loads(Path(path).read_text())


@dataclass
class QueryStats:
    neighbor_queries: int
    label_queries: int
    max_per_call: int

    def as_dict(self) -> dict[str, int]:
        return {
            "neighbor_queries": self.neighbor_queries,
            "label_queries": self.label_queries,
            "max_per_call": self.max_per_call,
        }


@dataclass
class OracleHandle:
    """Counted access to a graph through the two model queries.

    Counters only ever increase (except on :meth:`reset`).  An optional
    ``trace`` set records every label passed to :meth:`neighbor_query`.
    """

    graph: Graph
    neighbor_query_count: int = 0
    label_query_count: int = 0
    trace: set[int] | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def d(self) -> int:
        return self.graph.d

    @property
    def N(self) -> int:
        return self.graph.N

    def label_query(self, i: int) -> int:
        with self._lock:
            self.label_query_count += 1
        if not 1 <= i <= self.graph.n:
            raise RangeError(f"index {i} outside [1, {self.graph.n}]")
        return self.graph.labels[i - 1]

    def neighbor_query(self, v: int, r: int) -> int | None:
        with self._lock:
            self.neighbor_query_count += 1
            if self.trace is not None:
                self.trace.add(v)
        if not 1 <= r <= self.graph.d:
            raise RangeError(f"neighbor slot {r} outside [1, {self.graph.d}]")
        nb = self.graph.neighbors(v)
        return nb[r - 1] if r <= len(nb) else ABSENT

    @property
    def total(self) -> int:
        return self.neighbor_query_count + self.label_query_count

    def reset(self) -> None:
        with self._lock:
            self.neighbor_query_count = 0
            self.label_query_count = 0
            if self.trace is not None:
                self.trace.clear()


def label_query(handle: OracleHandle, i: int) -> int:
    return handle.label_query(i)


def neighbor_query(handle: OracleHandle, v: int, r: int) -> int | None:
    return handle.neighbor_query(v, r)


def connected_components(graph: Graph, vertices: Iterable[int]) -> list[list[int]]:
    """Connected components of the subgraph induced by ``vertices``, each sorted,
    listed by smallest member."""
    remaining = set(vertices)
    out = []
    for s in sorted(remaining):
        if s not in remaining:
            continue
        remaining.discard(s)
        comp, stack = [s], [s]
        while stack:
            x = stack.pop()
            for y in graph.neighbors(x):
                if y in remaining:
                    remaining.discard(y)
                    comp.append(y)
                    stack.append(y)
        out.append(sorted(comp))
    return out


def bfs_distances(graph: Graph, source: int, radius: int | None = None) -> dict[int, int]:
    dist = {source: 0}
    frontier = [source]
    r = 0
    while frontier and (radius is None or r < radius):
        r += 1
        nxt = []
        for x in frontier:
            for y in graph.neighbors(x):
                if y not in dist:
                    dist[y] = r
                    nxt.append(y)
        frontier = nxt
    return dist


def ball(graph: Graph, sources: Iterable[int], radius: int) -> set[int]:
    """Vertices within distance ``radius`` of any source."""
    seen = set(sources)
    frontier = list(seen)
    for _ in range(radius):
        nxt = []
        for x in frontier:
            for y in graph.neighbors(x):
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        if not nxt:
            break
        frontier = nxt
    return seen
