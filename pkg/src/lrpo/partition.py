"""Phased global partitioning driven by a seed bundle.

Phase ``h`` runs over the vertices still free at its start whose phase value
is ``h``, in increasing label order.  Each such center ``v`` computes
``cluster(v, t_v, k_h)`` and every connected component of the part of that
cluster that is still free becomes a new block.  ``k_h`` comes from
:func:`findr`, which samples vertices with the S2 seed and picks the smallest
ladder value for which enough samples are viable.  Vertices still free after
phase ``hbar`` become singletons.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Collection, Iterable, Sequence

from .diffusion import ClusterEngine
from .errors import ValidationError
from .graph import Graph, connected_components
from .randomness import Params, SeedBundle, SeedS1, SeedS2


@dataclass
class PhaseStat:
    h: int
    free: int          # |F_h|
    phased: int        # |V_h|
    k: int             # k_h, 0 when findr found nothing
    samples: int       # |S_h|
    clusters: int      # non-singleton clusters among the centers
    blocks: int        # components added this phase
    x: int             # sum over V_h of |cluster(v) & F_h|
    claimed: int       # vertices that left the free set this phase


@dataclass
class PartitionResult:
    components: list[list[int]]
    component_of: dict[int, int]
    cut_edges: list[tuple[int, int]]
    phase_stats: list[PhaseStat] = field(default_factory=list)
    anchors: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def charge(self) -> int:
        return sum(s.x for s in self.phase_stats)

    @property
    def max_component(self) -> int:
        return max((len(c) for c in self.components), default=0)

    def component(self, v: int) -> list[int]:
        return self.components[self.component_of[v]]

    def to_json(self, g: Graph, params: Params, seed_digest: str) -> dict:
        return {
            "n": g.n,
            "d": g.d,
            "params": params.to_dict(),
            "seed_digest": seed_digest,
            "components": self.components,
            "cut_edges": [list(e) for e in self.cut_edges],
            "phase_stats": [asdict(s) for s in self.phase_stats],
        }

    def dumps(self, g: Graph, params: Params, seed_digest: str) -> str:
        return json.dumps(self.to_json(g, params, seed_digest), sort_keys=True)


def is_viable(
    engine: ClusterEngine,
    v: int,
    k: int,
    is_free: Callable[[int], bool],
    params: Params,
) -> bool:
    """``v`` is (h,k)-viable w.r.t. the free set when enough timesteps ``t`` give a
    non-singleton ``cluster(v,t,k)`` holding at least ``beta^3 k`` free vertices."""
    need_free = params.beta**3 * k
    need_t = params.viable_need
    clusters = engine.good_clusters(v, k)
    if len(clusters) < need_t:
        return False
    good = 0
    for left, members in enumerate(clusters, start=1):
        cnt = 0
        for y in members:
            if is_free(y):
                cnt += 1
                if cnt >= need_free:
                    break
        if cnt >= need_free:
            good += 1
            if good >= need_t:
                return True
        if good + len(clusters) - left < need_t:
            return False
    return False


def findr_samples(s2: SeedS2, h: int, label_at: Callable[[int], int]) -> list[int]:
    return [label_at(s2.sample(h, j)) for j in range(1, s2.sample_budget + 1)]


def findr_from_samples(
    engine: ClusterEngine,
    samples: Sequence[int],
    is_free: Callable[[int], bool],
    params: Params,
) -> int:
    """Smallest ladder ``k`` with at least ``max(1, 12 beta^4 |S_h|)`` viable samples; 0 if none."""
    if not samples:
        return 0
    need = max(1.0, params.findr_fraction * len(samples))
    for k in params.ladder():
        count = 0
        for s in samples:
            if is_viable(engine, s, k, is_free, params):
                count += 1
                if count >= need:
                    return k
    return 0


def findr(
    g: Graph,
    s1: SeedS1,
    s2: SeedS2,
    h: int,
    F: Collection[int],
    params: Params,
    engine: ClusterEngine | None = None,
    phase: Callable[[int], int] | None = None,
) -> int:
    """Draw ``sample_budget`` vertices from V with S2, keep those in ``V_{>=h}``, and
    return the smallest ladder ``k`` with enough (h,k)-viable samples."""
    engine = engine or ClusterEngine(g, params)
    if phase is None:
        phase = lambda v: s1.phase_of(v) or s1.hbar + 1  # noqa: E731
    drawn = findr_samples(s2, h, lambda i: g.labels[i - 1])
    samples = [s for s in drawn if phase(s) >= h]
    return findr_from_samples(engine, samples, F.__contains__, params)


def global_partition(
    g: Graph,
    seeds: SeedBundle,
    params: Params,
    engine: ClusterEngine | None = None,
) -> PartitionResult:
    s1, s2 = seeds.s1, seeds.s2
    engine = engine or ClusterEngine(g, params)
    labels = g.labels
    phase_arr = s1.phases(labels)
    phase = dict(zip(labels, phase_arr.tolist()))
    by_phase: dict[int, list[int]] = {}
    for v in sorted(labels):
        by_phase.setdefault(phase[v], []).append(v)

    free = set(labels)
    components: list[list[int]] = []
    anchors: dict[int, tuple[int, int]] = {}
    stats: list[PhaseStat] = []

    for h in range(1, s1.hbar + 1):
        F_h = frozenset(free)
        V_h = [v for v in by_phase.get(h, ()) if v in F_h]
        drawn = findr_samples(s2, h, lambda i: labels[i - 1])
        samples = [s for s in drawn if phase[s] >= h]
        # an empty free set makes every sample non-viable
        k_h = findr_from_samples(engine, samples, F_h.__contains__, params) if F_h else 0
        x_h = n_clusters = n_blocks = 0
        if k_h > 0:
            for v in V_h:
                t_v = s1.timestep(h, v)
                members = engine.members(v, t_v, k_h)
                if members is None:
                    members = (v,)
                else:
                    n_clusters += 1
                x_h += sum(1 for y in members if y in F_h)
                fresh = [y for y in members if y in free]
                for comp in connected_components(g, fresh):
                    components.append(comp)
                    n_blocks += 1
                    for y in comp:
                        anchors[y] = (h, v)
                free.difference_update(fresh)
        stats.append(PhaseStat(h, len(F_h), len(V_h), k_h, len(samples), n_clusters, n_blocks, x_h, len(F_h) - len(free)))

    for v in sorted(free):
        components.append([v])
    return _finish(g, components, stats, anchors)


def _finish(g: Graph, components, stats, anchors) -> PartitionResult:
    components = sorted((sorted(c) for c in components), key=lambda c: c[0])
    component_of = {v: i for i, c in enumerate(components) for v in c}
    # uncovered vertices count as their own blocks; count_cut_edges rejects them
    cut = [(u, w) for u, w in g.edges() if component_of.get(u, ~u) != component_of.get(w, ~w)]
    return PartitionResult(components, component_of, cut, stats, anchors)


def partition_from_components(g: Graph, components: Iterable[Iterable[int]]) -> PartitionResult:
    return _finish(g, [list(c) for c in components], [], {})


def count_cut_edges(g: Graph, p: PartitionResult) -> int:
    missing = [v for v in g.labels if v not in p.component_of]
    if missing:
        raise ValidationError(f"partition does not cover vertices {missing[:5]}")
    comp = p.component_of
    return sum(1 for u, w in g.edges() if comp[u] != comp[w])


def validate_partition(g: Graph, p: PartitionResult, max_size: float | None = None) -> list[str]:
    """Every violated partition invariant, as messages (empty when valid)."""
    problems = []
    seen: dict[int, int] = {}
    for i, comp in enumerate(p.components):
        if not comp:
            problems.append(f"component {i} is empty")
            continue
        for v in comp:
            if v in seen:
                problems.append(f"vertex {v} in components {seen[v]} and {i}")
            seen[v] = i
        if len(connected_components(g, comp)) != 1:
            problems.append(f"component {i} is disconnected")
        if max_size is not None and len(comp) > max_size:
            problems.append(f"component {i} has size {len(comp)} > {max_size}")
    missing = set(g.labels) - seen.keys()
    if missing:
        problems.append(f"{len(missing)} vertices uncovered")
    extra = seen.keys() - set(g.labels)
    if extra:
        problems.append(f"{len(extra)} unknown labels in partition")
    if not problems:
        expected = [(u, w) for u, w in g.edges() if seen[u] != seen[w]]
        if sorted(expected) != sorted(tuple(e) for e in p.cut_edges):
            problems.append("cut_edges does not match the crossing edges")
    for a, b in zip(p.phase_stats, p.phase_stats[1:]):
        if b.free > a.free:
            problems.append(f"free set grew between phases {a.h} and {b.h}")
    return problems


def size_bound(params: Params) -> float:
    return params.ell / params.rho


def cut_fraction(g: Graph, cut: int) -> float:
    return cut / (g.d * g.n) if g.d and g.n else 0.0
