"""Planar bounded-degree graph generators.

Every generator builds the structure on positions ``0..n-1`` and then assigns
labels: ``1..n`` in structural order, or a random permutation of ``[1, n]``
drawn from the supplied generator when ``shuffle`` is set.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import UsageError
from .graph import Graph

GENERATORS = ("cycle", "path", "grid", "binary-tree", "random-outerplanar")


def _relabel(n: int, rng: np.random.Generator | None, shuffle: bool) -> list[int]:
    if shuffle:
        if rng is None:
            raise UsageError("shuffled labels need an rng")
        return [int(x) + 1 for x in rng.permutation(n)]
    return list(range(1, n + 1))


def _build(n: int, edges: list[tuple[int, int]], d: int, rng, shuffle: bool) -> Graph:
    labels = _relabel(n, rng, shuffle)
    return Graph.from_edges(labels, [(labels[a], labels[b]) for a, b in edges], d, N=n)


def cycle(n: int, rng: np.random.Generator | None = None, shuffle: bool = False) -> Graph:
    if n < 1:
        raise UsageError("n must be at least 1")
    if n == 1:
        edges = []
    elif n == 2:
        edges = [(0, 1)]  # a 2-cycle would need a parallel edge
    else:
        edges = [(i, (i + 1) % n) for i in range(n)]
    return _build(n, edges, 2, rng, shuffle)


def path(n: int, rng: np.random.Generator | None = None, shuffle: bool = False) -> Graph:
    if n < 1:
        raise UsageError("n must be at least 1")
    return _build(n, [(i, i + 1) for i in range(n - 1)], 2, rng, shuffle)


def grid(n: int, rng: np.random.Generator | None = None, shuffle: bool = False, cols: int | None = None) -> Graph:
    """``rows x cols`` grid; without ``cols`` the grid is square and ``n`` must be a square."""
    if n < 1:
        raise UsageError("n must be at least 1")
    if cols is None:
        cols = math.isqrt(n)
        if cols * cols != n:
            raise UsageError(f"square grid needs a perfect square n, got {n}")
    if n % cols:
        raise UsageError(f"{cols} columns do not divide n={n}")
    rows = n // cols
    edges = []
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                edges.append((v, v + 1))
            if i + 1 < rows:
                edges.append((v, v + cols))
    return _build(n, edges, 4, rng, shuffle)


def binary_tree(n: int, rng: np.random.Generator | None = None, shuffle: bool = False) -> Graph:
    """Complete binary tree in heap order."""
    if n < 1:
        raise UsageError("n must be at least 1")
    return _build(n, [((i - 1) // 2, i) for i in range(1, n)], 3, rng, shuffle)


def random_outerplanar(
    n: int,
    rng: np.random.Generator,
    shuffle: bool = False,
    d: int = 4,
    pendant_prob: float = 0.2,
) -> Graph:
    """Random outerplanar graph grown by ears along the outer boundary walk.

    The boundary is kept as a closed walk whose consecutive entries are edges.
    A triangle ear puts a new vertex between two consecutive walk entries and
    joins it to both; a pendant ear hangs a new vertex off one walk entry.  Both
    keep every vertex on the outer face.  Ears that would exceed degree ``d``
    are rejected.
    """
    if n < 1:
        raise UsageError("n must be at least 1")
    if d < 2:
        raise UsageError("random-outerplanar needs d >= 2")
    deg = [0] * n
    edges: list[tuple[int, int]] = []

    def add(a: int, b: int) -> None:
        edges.append((a, b))
        deg[a] += 1
        deg[b] += 1

    if n == 1:
        return _build(1, [], d, rng, shuffle)
    add(0, 1)
    walk = [0, 1]  # closed: walk[-1] is adjacent to walk[0]
    for c in range(2, n):
        placed = False
        for _ in range(64):
            i = int(rng.integers(len(walk)))
            a, b = walk[i], walk[(i + 1) % len(walk)]
            if rng.random() >= pendant_prob and a != b and deg[a] < d and deg[b] < d:
                add(a, c)
                add(b, c)
                walk.insert(i + 1, c)
                placed = True
                break
            if deg[a] < d:
                add(a, c)
                walk[i + 1 : i + 1] = [c, a]
                placed = True
                break
        if not placed:
            free = [v for v in walk if deg[v] < d]
            if not free:
                raise UsageError("degree cap leaves no room for another vertex")
            a = free[int(rng.integers(len(free)))]
            i = walk.index(a)
            add(a, c)
            walk[i + 1 : i + 1] = [c, a]
    return _build(n, edges, d, rng, shuffle)


def generate(name: str, n: int, rng_seed: int = 0, shuffle: bool = False, **kwargs) -> Graph:
    """Deterministic given ``(name, n, rng_seed, shuffle)``."""
    rng = np.random.default_rng(rng_seed)
    makers: dict[str, Callable[..., Graph]] = {
        "cycle": cycle,
        "path": path,
        "grid": grid,
        "binary-tree": binary_tree,
        "random-outerplanar": random_outerplanar,
    }
    maker = makers.get(name)
    if maker is None:
        raise UsageError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
    return maker(n, rng, shuffle, **kwargs)


def outerplanar_audit(g: Graph) -> list[str]:
    """Cheap structural checks: the Euler bound for outerplanar graphs and simplicity."""
    problems = []
    if g.n >= 2 and g.num_edges() > 2 * g.n - 3:
        problems.append(f"m={g.num_edges()} exceeds 2n-3={2 * g.n - 3}")
    return problems
