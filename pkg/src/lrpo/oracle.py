"""Local partition oracle.

Answers ``find_partition(u)`` with the component that :func:`global_partition`
would assign to ``u``, using only label and neighbor queries on an
:class:`OracleHandle` plus the shared seed bundle.

The global procedure processes turns ``(h, w)`` in lexicographic (phase, label)
order.  The anchor of ``x`` is the first turn whose center is still free at the
start of its phase, has ``k_h > 0`` and has ``x`` in its cluster.  Only members
of the inverse ball of ``x`` can be such centers, so the anchor is found by
scanning that ball in turn order.  Whether a center is free, and the values
``k_h`` (which depend on freeness of sampled vertices), are resolved by the same
search restricted to strictly earlier phases.  Each vertex keeps a cursor into
its sorted candidate list, so the search is incremental and every candidate is
tested at most once per memo.
"""

from __future__ import annotations

import sys
import threading
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass

from .diffusion import ClusterEngine
from .errors import NotFoundError
from .graph import ABSENT, Graph, OracleHandle, QueryStats, ball
from .partition import findr_from_samples, findr_samples
from .randomness import Params, SeedBundle

LEFTOVER = None


class LocalView:
    """Adjacency seen through neighbor queries; each label is expanded once."""

    def __init__(self, handle: OracleHandle) -> None:
        self.handle = handle
        self.d = handle.d
        self._nb: dict[int, tuple[int, ...]] = {}

    def neighbors(self, v: int) -> tuple[int, ...]:
        nb = self._nb.get(v)
        if nb is None:
            out = []
            for r in range(1, self.d + 1):
                w = self.handle.neighbor_query(v, r)
                if w is ABSENT:
                    break
                out.append(w)
            if self.d == 0 and not self._known(v):
                raise NotFoundError(f"label {v} is not a vertex")
            nb = self._nb[v] = tuple(out)
        return nb

    def _known(self, v: int) -> bool:
        # with d = 0 there is no neighbor query to fail on unknown labels
        return v in self.handle.graph

    @property
    def explored(self) -> set[int]:
        return set(self._nb)


@dataclass(frozen=True)
class AnchorDecision:
    vertex: int
    anchor: tuple[int, int] | None  # (phase, center) or LEFTOVER
    component: frozenset[int]

    @property
    def leftover(self) -> bool:
        return self.anchor is LEFTOVER


class _Cursor:
    __slots__ = ("cands", "i", "found")

    def __init__(self, cands: list[tuple[int, int]]) -> None:
        self.cands = cands  # (phase, label), sorted
        self.i = 0
        self.found: tuple[int, int] | None = None


class _Memo:
    """Everything derived during oracle calls; a pure function of (graph, seeds)."""

    def __init__(self, handle: OracleHandle, params: Params) -> None:
        self.view = LocalView(handle)
        self.engine = ClusterEngine(self.view, params)
        self.k: dict[int, int] = {}
        self.cursors: dict[int, _Cursor] = {}
        self.phase: dict[int, int] = {}
        self.sample_roots: set[int] = set()


class LocalOracle:
    """Per-vertex oracle over a counted handle.

    With ``shared_memo=True`` derived facts persist across calls, which only
    saves work.  With ``shared_memo=False`` every call starts cold, so the
    recorded per-call query counts are the honest local cost.
    """

    def __init__(
        self,
        handle: OracleHandle,
        seeds: SeedBundle,
        params: Params | None = None,
        *,
        shared_memo: bool = True,
    ) -> None:
        self.handle = handle
        self.seeds = seeds
        self.params = params or seeds.params
        self.shared_memo = shared_memo
        self.s1 = seeds.s1
        self.s2 = seeds.s2
        self.hbar = self.s1.hbar
        self.calls = 0
        self.max_per_call = 0
        self._lock = threading.RLock()
        self._memo = _Memo(handle, self.params)
        self.last_sample_roots: set[int] = set()

    # -- public API ----------------------------------------------------
    def find_anchor(self, u: int) -> tuple[int, int] | None:
        with self._call():
            return self._anchor_before(u, self.hbar + 1)

    def find_partition(self, u: int) -> frozenset[int]:
        return self.decide(u).component

    def decide(self, u: int) -> AnchorDecision:
        with self._call():
            anchor = self._anchor_before(u, self.hbar + 1)
            if anchor is LEFTOVER:
                return AnchorDecision(u, LEFTOVER, frozenset((u,)))
            return AnchorDecision(u, anchor, self._component(u, anchor))

    def stats(self) -> QueryStats:
        return QueryStats(self.handle.neighbor_query_count, self.handle.label_query_count, self.max_per_call)

    def reset(self) -> None:
        with self._lock:
            self.handle.reset()
            self.max_per_call = 0
            self.calls = 0

    def k_of_phase(self, h: int) -> int:
        with self._call():
            return self._k(h)

    # -- internals -----------------------------------------------------
    @contextmanager
    def _call(self):
        with self._lock:
            if not self.shared_memo:
                self._memo = _Memo(self.handle, self.params)
            before = self.handle.total
            limit = sys.getrecursionlimit()
            sys.setrecursionlimit(max(limit, 20_000))
            try:
                yield
            finally:
                sys.setrecursionlimit(limit)
                self.calls += 1
                self.max_per_call = max(self.max_per_call, self.handle.total - before)
                self.last_sample_roots = set(self._memo.sample_roots)

    def _phase(self, v: int) -> int:
        ph = self._memo.phase.get(v)
        if ph is None:
            p = self.s1.phase_of(v)
            ph = self._memo.phase[v] = self.hbar + 1 if p is None else p
        return ph

    def _k(self, h: int) -> int:
        memo = self._memo
        k = memo.k.get(h)
        if k is None:
            drawn = findr_samples(self.s2, h, self.handle.label_query)
            samples = [s for s in drawn if self._phase(s) >= h]
            memo.sample_roots.update(samples)
            k = findr_from_samples(memo.engine, samples, lambda y: self._anchor_before(y, h) is None, self.params)
            memo.k[h] = k
        return k

    def _cursor(self, x: int) -> _Cursor:
        cur = self._memo.cursors.get(x)
        if cur is None:
            cands = sorted(
                (self._phase(w), w) for w in self._memo.engine.inverse_ball(x) if self._phase(w) <= self.hbar
            )
            cur = self._memo.cursors[x] = _Cursor(cands)
        return cur

    def _members(self, h: int, w: int, k: int) -> tuple[int, ...]:
        members = self._memo.engine.members(w, self.s1.timestep(h, w), k)
        return (w,) if members is None else members

    def _anchor_before(self, x: int, H: int) -> tuple[int, int] | None:
        """Anchor of ``x`` if it lies in a phase ``< H``, else None."""
        cur = self._cursor(x)
        while cur.found is None and cur.i < len(cur.cands):
            h, w = cur.cands[cur.i]
            if h >= H:
                return None
            # nested calls only look at phases < h, so they never move this cursor
            if self._claims(h, w, x):
                cur.found = (h, w)
            else:
                cur.i += 1
        if cur.found is not None and cur.found[0] < H:
            return cur.found
        return None

    def _claims(self, h: int, w: int, x: int) -> bool:
        k = self._k(h)
        if k == 0:
            return False
        if x != w and x not in self._members(h, w, k):
            return False
        # w is a center only if still free when phase h starts
        return w == x or self._anchor_before(w, h) is None

    def _component(self, u: int, anchor: tuple[int, int]) -> frozenset[int]:
        h, w = anchor
        inside = set(self._members(h, w, self._k(h)))
        comp = {u}
        queue = deque([u])
        while queue:
            y = queue.popleft()
            for z in self._memo.view.neighbors(y):
                if z in inside and z not in comp and self._anchor_before(z, h + 1) == anchor:
                    comp.add(z)
                    queue.append(z)
        return frozenset(comp)


def find_anchor(handle: OracleHandle, seeds: SeedBundle, params: Params, u: int, memo: LocalOracle | None = None):
    oracle = memo or LocalOracle(handle, seeds, params)
    return oracle.find_anchor(u)


def find_partition(handle: OracleHandle, seeds: SeedBundle, params: Params, u: int, memo: LocalOracle | None = None):
    oracle = memo or LocalOracle(handle, seeds, params)
    return oracle.find_partition(u)


def oracle_query_stats(oracle: LocalOracle) -> QueryStats:
    return oracle.stats()


def locality_radius(params: Params) -> int:
    return (params.hbar + 2) * params.ell


def locality_violations(g: Graph, seeds: SeedBundle, params: Params, u: int) -> set[int]:
    """Vertices a cold call for ``u`` queried outside the allowed balls around
    ``u`` and the findr sample roots it drew (empty when local)."""
    handle = OracleHandle(g, trace=set())
    oracle = LocalOracle(handle, seeds, params, shared_memo=False)
    oracle.find_partition(u)
    allowed = ball(g, {u} | oracle.last_sample_roots, locality_radius(params))
    return handle.trace - allowed
