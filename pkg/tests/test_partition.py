from __future__ import annotations

import math

import numpy as np
import pytest

from lrpo.diffusion import ClusterEngine
from lrpo.errors import ValidationError
from lrpo.generators import cycle, generate, grid
from lrpo.graph import Graph
from lrpo.partition import (
    count_cut_edges,
    cut_fraction,
    findr,
    global_partition,
    is_viable,
    partition_from_components,
    size_bound,
    validate_partition,
)
from lrpo.randomness import Params, SeedBundle

from conftest import seeded
from reference import RefDiffusion, ref_findr, ref_global_partition, ref_viable


# -- findr --------------------------------------------------------------------

def test_findr_empty_free_set(cycle40):
    p = Params.practical(2)
    sb = seeded(p, cycle40)
    assert findr(cycle40, sb.s1, sb.s2, 1, frozenset(), p) == 0


def test_findr_vacuous_phi_returns_one(cycle40):
    p = Params.practical(2, phi=1.1, delta=1.0)  # every vertex in V_{>=1}
    assert p.beta**3 * 1 <= 1
    sb = seeded(p, cycle40)
    F = frozenset(cycle40.labels)
    assert findr(cycle40, sb.s1, sb.s2, 1, F, p) == 1
    diff = RefDiffusion(cycle40, p.rho)
    assert all(ref_viable(diff, v, 1, F, p) for v in cycle40.labels)


@pytest.mark.parametrize("seed", range(3))
def test_findr_matches_exhaustive_reference_grid(seed):
    g = generate("grid", 400, rng_seed=seed, shuffle=True)
    p = Params.practical(4)
    sb = seeded(p, g, seed)
    rng = np.random.default_rng(seed)
    engine = ClusterEngine(g, p)
    diff = RefDiffusion(g, p.rho)
    for frac in (1.0, 0.5):
        F = frozenset(v for v in g.labels if rng.random() < frac)
        for h in (1, 2):
            assert findr(g, sb.s1, sb.s2, h, F, p, engine) == ref_findr(diff, sb.s1, sb.s2, h, F, p)


# -- is_viable ------------------------------------------------------------------

def test_viable_false_when_free_set_too_small(cycle40):
    p = Params.practical(2)
    eng = ClusterEngine(cycle40, p)
    F = frozenset({1, 2, 3})
    k = 64  # beta^3 * 64 = 4.1 > |F|
    assert not is_viable(eng, 2, k, F.__contains__, p)


def test_viable_single_timestep():
    g = cycle(40)
    p = Params.practical(2, ell=1, phi=1.1)
    assert p.viable_need == 1
    eng = ClusterEngine(g, p)
    assert is_viable(eng, 5, 1, lambda y: True, p)


@pytest.mark.parametrize("k", [1, 2, 4, 8, 16])
def test_viable_matches_reference_cycle(cycle40, k):
    p = Params.practical(2)
    eng = ClusterEngine(cycle40, p)
    diff = RefDiffusion(cycle40, p.rho)
    rng = np.random.default_rng(k)
    for frac in (1.0, 0.6):
        F = frozenset(v for v in cycle40.labels if rng.random() < frac)
        for v in cycle40.labels:
            assert is_viable(eng, v, k, F.__contains__, p) == ref_viable(diff, v, k, F, p)


# -- global_partition -----------------------------------------------------------

def test_delta_zero_all_singletons(cycle40):
    p = Params.practical(2, delta=0.0)
    res = global_partition(cycle40, seeded(p, cycle40), p)
    assert res.components == [[v] for v in sorted(cycle40.labels)]
    assert len(res.cut_edges) == 40


def test_single_vertex(single):
    p = Params.practical(2)
    res = global_partition(single, seeded(p, single), p)
    assert res.components == [[5]] and res.cut_edges == []


@pytest.mark.parametrize("seed", range(4))
def test_cycle64_matches_sequential_reference(seed):
    g = generate("cycle", 64, rng_seed=seed, shuffle=True)
    p = Params.practical(2)
    sb = seeded(p, g, seed)
    res = global_partition(g, sb, p)
    comps, ks, charge = ref_global_partition(g, sb, p)
    assert res.components == comps
    assert [s.k for s in res.phase_stats] == ks
    assert res.charge == charge
    assert validate_partition(g, res, size_bound(p)) == []


@pytest.mark.parametrize("name,n", [("grid", 64), ("random-outerplanar", 60), ("binary-tree", 63)])
def test_other_graphs_match_reference(name, n):
    g = generate(name, n, rng_seed=4, shuffle=True)
    p = Params.practical(g.d, phi=0.4)
    sb = seeded(p, g, 4)
    assert global_partition(g, sb, p).components == ref_global_partition(g, sb, p)[0]


def test_partition_json_and_determinism(grid8):
    p = Params.practical(4)
    sb = seeded(p, grid8, 1)
    a = global_partition(grid8, sb, p)
    b = global_partition(grid8, SeedBundle.from_bytes(sb.to_bytes()), p)
    assert a.dumps(grid8, p, sb.digest()) == b.dumps(grid8, p, sb.digest())
    js = a.to_json(grid8, p, sb.digest())
    assert set(js) >= {"n", "d", "params", "seed_digest", "components", "cut_edges", "phase_stats"}


@pytest.mark.parametrize("name,n", [("cycle", 256), ("grid", 256), ("binary-tree", 255), ("random-outerplanar", 256)])
def test_validity_and_free_monotone(name, n):
    g = generate(name, n, rng_seed=1, shuffle=True)
    p = Params.practical(g.d)
    eng = ClusterEngine(g, p)
    for s in range(5):
        res = global_partition(g, seeded(p, g, s), p, eng)
        assert validate_partition(g, res, size_bound(p)) == []
        frees = [st.free for st in res.phase_stats]
        assert frees == sorted(frees, reverse=True)
        # every vertex of a multi-vertex block was claimed by some center
        assert all(v in res.anchors for c in res.components if len(c) > 1 for v in c)


def test_phase_marginals():
    # fraction of F_h landing in phase h, pooled over phases and seeds, is delta within 3 sigma
    g = generate("cycle", 200, rng_seed=0, shuffle=True)
    p = Params.practical(2)
    eng = ClusterEngine(g, p)
    rng = np.random.default_rng(17)
    phased = free = 0
    for _ in range(1000):
        sb = SeedBundle.random(p, g.N, g.n, rng)
        st = global_partition(g, sb, p, eng).phase_stats[0]
        phased += st.phased
        free += st.free
    sigma = math.sqrt(p.delta * (1 - p.delta) / free)
    assert abs(phased / free - p.delta) <= 3 * sigma


def test_cutoff_phase_on_grids():
    g = generate("grid", 1024, rng_seed=0, shuffle=True)
    p = Params.practical(4, phi=0.45, rho=0.01, beta=0.45, delta=0.05)
    eng = ClusterEngine(g, p)
    hits = 0
    runs = 40
    for s in range(runs):
        res = global_partition(g, seeded(p, g, 100 + s), p, eng)
        hits += any(st.free < p.beta * g.n for st in res.phase_stats)
    assert hits >= 0.95 * runs


# -- cut accounting -------------------------------------------------------------

def test_count_cut_all_singletons_and_whole(cycle40):
    assert count_cut_edges(cycle40, partition_from_components(cycle40, [[v] for v in cycle40.labels])) == 40
    assert count_cut_edges(cycle40, partition_from_components(cycle40, [cycle40.labels])) == 0


def test_count_cut_incomplete(cycle40):
    with pytest.raises(ValidationError):
        count_cut_edges(cycle40, partition_from_components(cycle40, [[1, 2]]))


def test_count_cut_random_partitions_grid():
    g = grid(100)
    rng = np.random.default_rng(3)
    for _ in range(25):
        color = {v: int(rng.integers(0, 5)) for v in g.labels}
        comps = [[v for v in g.labels if color[v] == c] for c in range(5)]
        res = partition_from_components(g, [c for c in comps if c])
        brute = sum(
            1 for u in g.labels for w in g.labels if u < w and w in g.neighbors(u) and color[u] != color[w]
        )
        assert count_cut_edges(g, res) == brute
        assert cut_fraction(g, brute) == brute / (4 * 100)


def test_validate_partition_reports_problems(cycle40):
    bad = partition_from_components(cycle40, [[1, 3], [2]] + [[v] for v in range(4, 41)])
    assert any("disconnected" in m for m in validate_partition(cycle40, bad))
    big = partition_from_components(cycle40, [list(range(1, 41))])
    assert any("size" in m for m in validate_partition(cycle40, big, 10))
    dup = partition_from_components(cycle40, [[1, 2], [2, 3]] + [[v] for v in range(4, 41)])
    assert validate_partition(cycle40, dup)
