from __future__ import annotations

import pytest

from lrpo.errors import NotFoundError, RangeError, ValidationError
from lrpo.generators import generate
from lrpo.graph import (
    ABSENT,
    Graph,
    OracleHandle,
    ball,
    bfs_distances,
    connected_components,
    label_query,
    neighbor_query,
)


def test_label_query_direct_lookup():
    g = Graph.from_edges([7, 19, 42], [(7, 19), (19, 42)], d=2, N=50)
    h = OracleHandle(g)
    assert label_query(h, 2) == 19
    assert label_query(h, 1) == 7


def test_label_query_enumerates_every_label_once():
    g = generate("random-outerplanar", 1000, rng_seed=1, shuffle=True)
    h = OracleHandle(g)
    seen = [h.label_query(i) for i in range(1, 1001)]
    assert sorted(seen) == sorted(g.labels)
    assert len(set(seen)) == 1000
    assert h.label_query_count == 1000


@pytest.mark.parametrize("i", [0, 4, -1])
def test_label_query_out_of_range(i):
    g = Graph.from_edges([1, 2, 3], [(1, 2)], d=2)
    with pytest.raises(RangeError):
        OracleHandle(g).label_query(i)


def test_neighbor_slots_follow_storage_order():
    g = generate("cycle", 4)
    h = OracleHandle(g)
    assert neighbor_query(h, 1, 1) == 2
    assert neighbor_query(h, 1, 2) == 4


def test_missing_slot_is_absent():
    g = generate("path", 2)
    assert OracleHandle(g).neighbor_query(1, 2) is ABSENT


def test_neighbor_query_errors():
    g = generate("path", 3)
    h = OracleHandle(g)
    with pytest.raises(RangeError):
        h.neighbor_query(1, 3)
    with pytest.raises(RangeError):
        h.neighbor_query(1, 0)
    with pytest.raises(NotFoundError):
        h.neighbor_query(99, 1)
    assert h.neighbor_query_count == 3


@pytest.mark.parametrize("name,n", [("grid", 64), ("binary-tree", 100), ("random-outerplanar", 200)])
def test_neighbor_symmetry_round_trip(name, n):
    g = generate(name, n, rng_seed=2, shuffle=True)
    h = OracleHandle(g)
    for v in g.labels:
        for r in range(1, g.d + 1):
            w = h.neighbor_query(v, r)
            if w is ABSENT:
                assert r > g.degree(v)
                continue
            back = [h.neighbor_query(w, s) for s in range(1, g.d + 1)]
            assert v in back


@pytest.mark.parametrize(
    "labels,adj,d,N",
    [
        ([1, 1], [[], []], 2, None),  # duplicate
        ([1, 2], [[2], []], 2, None),  # asymmetric
        ([1, 2], [[1], []], 2, None),  # self-loop
        ([1, 2, 3], [[2, 3], [1], [1]], 1, None),  # degree bound
        ([1, 2], [[2, 2], [1, 1]], 3, None),  # parallel edge
        ([1, 20], [[], []], 2, 10),  # label outside universe
    ],
)
def test_graph_validation(labels, adj, d, N):
    with pytest.raises(ValidationError):
        Graph(labels, adj, d, N)


def test_text_round_trip(tmp_path):
    g = generate("random-outerplanar", 50, rng_seed=4, shuffle=True)
    path = tmp_path / "g.txt"
    g.save(path)
    g2 = Graph.load(path)
    assert g2.labels == g.labels
    assert all(g2.neighbors(v) == g.neighbors(v) for v in g.labels)
    assert (g2.n, g2.d, g2.N) == (g.n, g.d, g.N)


@pytest.mark.parametrize("text", ["", "2 2 5\n1 1 2\n", "1 2 5\n1 2 3\n", "x y z\n"])
def test_text_format_errors(text):
    with pytest.raises(ValidationError):
        Graph.loads(text)


def test_handle_trace_and_reset():
    g = generate("cycle", 10)
    h = OracleHandle(g, trace=set())
    h.neighbor_query(3, 1)
    h.label_query(1)
    assert h.trace == {3}
    assert h.total == 2
    h.reset()
    assert (h.neighbor_query_count, h.label_query_count, h.trace) == (0, 0, set())


def test_components_and_balls():
    g = generate("path", 10)
    assert connected_components(g, [1, 2, 4, 5, 6, 9]) == [[1, 2], [4, 5, 6], [9]]
    assert bfs_distances(g, 5, 2) == {5: 0, 4: 1, 6: 1, 3: 2, 7: 2}
    assert ball(g, [1, 10], 1) == {1, 2, 9, 10}
