"""Comparison-based canonical oracles on labeled cycles.

A canonical tree answers "is ``u`` cut?" for a vertex of a cycle.  It keeps a
list of seed vertices, starting with ``u``.  At every internal node it gathers
the ball ``B(s)`` (the ``2q+1`` labels at cycle distance ``<= q``, in cycle
order) of each seed and reads off the permutation pattern of all gathered
labels.  The node maps that pattern to an index ``i``, and ``label_query(i)``
adds a new seed.  A leaf maps the final pattern to cut / not-cut.

Patterns are dense-rank tuples: equal labels get equal ranks.  Repeats occur
when two balls overlap.  A node that has gathered ``m`` balls sees a pattern
of length ``m (2q+1)``, and we call ``m`` the node's ``depth``.  A tree that
makes ``j`` label queries ends in leaves of depth ``j + 1``.

On a cycle whose labels increase along the vertex order, every vertex far
enough from all emitted indices sees the same pattern.  Such vertices form
chunks, and a chunk gets one output.  :func:`compute_chunks` finds them and
:func:`verify_chunk_uniformity` checks the uniformity by direct evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetError, NotFoundError, ValidationError

Pattern = tuple[int, ...]
WILDCARD = "*"


def dense_ranks(values: Sequence[int]) -> Pattern:
    order = {v: i for i, v in enumerate(sorted(set(values)), start=1)}
    return tuple(order[v] for v in values)


def pattern_key(p: Pattern) -> str:
    return ",".join(map(str, p))


def parse_pattern(s: str) -> Pattern:
    return tuple(int(x) for x in s.split(",")) if s else ()


@lru_cache(maxsize=None)
def fubini(m: int) -> int:
    """Number of weak orders on ``m`` items, i.e. of dense-rank patterns of length ``m``."""
    if m == 0:
        return 1
    return sum(math.comb(m, j) * fubini(m - j) for j in range(1, m + 1))


def pattern_domain_size(depth: int, q: int) -> int:
    """Patterns a node of this depth can meet: strict orders for a single ball,
    weak orders once balls may overlap."""
    m = depth * (2 * q + 1)
    return math.factorial(m) if depth <= 1 else fubini(m)


@dataclass
class Node:
    depth: int
    table: dict[Pattern, int] = field(default_factory=dict)
    default: int = 1
    children: dict[int, "Node"] = field(default_factory=dict)
    fallback: "Node | None" = None  # child for indices missing from ``children``
    leaf: bool = False

    def child(self, index: int) -> "Node":
        nxt = self.children.get(index, self.fallback)
        if nxt is None:
            raise ValidationError(f"no child for index {index} at depth {self.depth}")
        return nxt

    def output(self, pattern: Pattern) -> int:
        return self.table.get(pattern, self.default)


class CanonicalTree:
    """Decision tree with comparison-based node functions."""

    def __init__(self, root: Node, q: int) -> None:
        self.root = root
        self.q = q
        self.validate()

    @property
    def arity(self) -> int:
        return 2 * self.q + 1

    def nodes(self) -> Iterable[Node]:
        stack, seen = [self.root], set()
        while stack:
            z = stack.pop()
            if id(z) in seen:
                continue
            seen.add(id(z))
            yield z
            stack.extend(z.children.values())
            if z.fallback is not None:
                stack.append(z.fallback)

    @property
    def query_depth(self) -> int:
        return max(z.depth for z in self.nodes()) - 1

    def validate(self) -> None:
        if self.q < 1:
            raise ValidationError("q must be at least 1")
        if self.root.depth != 1:
            raise ValidationError("the root must have depth 1")
        for z in self.nodes():
            if z.depth > self.q + 1:
                raise ValidationError(f"node depth {z.depth} exceeds q + 1 = {self.q + 1}")
            width = z.depth * self.arity
            for p in z.table:
                if len(p) != width:
                    raise ValidationError(f"pattern of length {len(p)} at a node of arity {width}")
                if sorted(set(p)) != list(range(1, max(p, default=0) + 1)):
                    raise ValidationError(f"{p} is not a dense-rank pattern")
            if z.leaf:
                if z.children or z.fallback is not None:
                    raise ValidationError("leaves have no children")
                if any(b not in (0, 1) for b in z.table.values()) or z.default not in (0, 1):
                    raise ValidationError("leaf outputs must be 0 or 1")
            else:
                kids = list(z.children.values()) + ([z.fallback] if z.fallback is not None else [])
                if not kids:
                    raise ValidationError("internal node without children")
                if any(c.depth != z.depth + 1 for c in kids):
                    raise ValidationError("child depth must be parent depth + 1")
                if any(i < 1 for i in [*z.table.values(), z.default]):
                    raise ValidationError("indices are 1-based")

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {"q": self.q, "root": _node_to_json(self.root)}

    @classmethod
    def from_json(cls, data: dict) -> "CanonicalTree":
        try:
            return cls(_node_from_json(data["root"]), int(data["q"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed tree: {exc}") from None


def _node_to_json(z: Node) -> dict:
    out: dict = {
        "depth": z.depth,
        "table": {pattern_key(p): v for p, v in sorted(z.table.items())},
        "default": z.default,
    }
    if z.leaf:
        out["leaf"] = True
    else:
        kids = {str(i): _node_to_json(c) for i, c in sorted(z.children.items())}
        if z.fallback is not None:
            kids[WILDCARD] = _node_to_json(z.fallback)
        out["children"] = kids
    return out


def _node_from_json(d: dict) -> Node:
    leaf = bool(d.get("leaf", False))
    z = Node(
        depth=int(d["depth"]),
        table={parse_pattern(k): int(v) for k, v in d.get("table", {}).items()},
        default=int(d.get("default", 0 if leaf else 1)),
        leaf=leaf,
    )
    for key, sub in d.get("children", {}).items():
        if key == WILDCARD:
            z.fallback = _node_from_json(sub)
        else:
            z.children[int(key)] = _node_from_json(sub)
    return z


@dataclass
class TreeFamily:
    trees: list[CanonicalTree]
    r: int
    q: int

    def __post_init__(self) -> None:
        if len(self.trees) != 2**self.r:
            raise ValidationError(f"a family with r={self.r} needs {2**self.r} trees, got {len(self.trees)}")
        if any(t.q != self.q for t in self.trees):
            raise ValidationError("all trees must share q")

    def to_json(self) -> dict:
        return {"r": self.r, "q": self.q, "trees": [t.to_json() for t in self.trees]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> "TreeFamily":
        try:
            return cls([CanonicalTree.from_json(t) for t in data["trees"]], int(data["r"]), int(data["q"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed family: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "TreeFamily":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


# -- evaluation -------------------------------------------------------------


class CycleAccess:
    """Query access to a cycle given by its labels in cycle order, with counters."""

    def __init__(self, labels: Sequence[int]) -> None:
        self.labels = list(labels)
        self.n = len(self.labels)
        self.pos = {v: i for i, v in enumerate(self.labels)}
        if len(self.pos) != self.n:
            raise ValidationError("cycle labels must be distinct")
        self.neighbor_queries = 0
        self.label_queries = 0

    def label_query(self, i: int) -> int:
        self.label_queries += 1
        if not 1 <= i <= self.n:
            raise NotFoundError(f"index {i} outside [1, {self.n}]")
        return self.labels[i - 1]

    def neighbor_query(self, v: int, r: int) -> int:
        """Slot 1 is the predecessor, slot 2 the successor in cycle order."""
        self.neighbor_queries += 1
        i = self.pos[v]
        return self.labels[(i - 1) % self.n] if r == 1 else self.labels[(i + 1) % self.n]

    def ball(self, v: int, q: int) -> list[int]:
        left, right = [], []
        a = b = v
        for _ in range(q):
            a = self.neighbor_query(a, 1)
            left.append(a)
        for _ in range(q):
            b = self.neighbor_query(b, 2)
            right.append(b)
        return left[::-1] + [v] + right


def query_bound(q: int) -> int:
    """Largest query count of one run: ``q + 1`` balls and ``q`` label queries."""
    return (q + 1) * 2 * q + q


def run_canonical_oracle(tree: CanonicalTree, cycle: CycleAccess | Sequence[int], u: int) -> bool:
    access = cycle if isinstance(cycle, CycleAccess) else CycleAccess(cycle)
    if u not in access.pos:
        raise NotFoundError(f"label {u} is not on the cycle")
    start = access.neighbor_queries + access.label_queries
    q = tree.q
    gathered = access.ball(u, q)
    z = tree.root
    while True:
        pattern = dense_ranks(gathered)
        if z.leaf:
            out = z.output(pattern) == 1
            break
        idx = z.output(pattern)
        gathered += access.ball(access.label_query(idx), q)
        z = z.child(idx)
    used = access.neighbor_queries + access.label_queries - start
    if used > query_bound(q):
        raise BudgetError(f"run used {used} queries, more than {query_bound(q)}")
    return out


def evaluate_all(tree: CanonicalTree, labels: Sequence[int]) -> list[bool]:
    access = CycleAccess(labels)
    return [run_canonical_oracle(tree, access, u) for u in access.labels]


# -- seeds and chunks ---------------------------------------------------------


def node_indices(z: Node, q: int) -> set[int]:
    """Indices node ``z`` can emit over every pattern it may meet."""
    out = set(z.table.values())
    if len(z.table) < pattern_domain_size(z.depth, q):
        out.add(z.default)
    return out


def enumerate_seed_indices(f: TreeFamily) -> set[int]:
    out: set[int] = set()
    for t in f.trees:
        for z in t.nodes():
            if not z.leaf:
                out |= node_indices(z, f.q)
    return out


def seed_count_bound(r: int, q: int) -> int:
    return 2**r * q ** (5 * q**3)


@dataclass
class ChunkReport:
    entire_seed_set: set[int]
    chunks: list[tuple[int, int]]  # inclusive position intervals, 1-based
    covered: int
    n: int
    q: int

    @property
    def coverage(self) -> float:
        return self.covered / self.n if self.n else 0.0

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "seeds": sorted(self.entire_seed_set),
            "chunks": [list(c) for c in self.chunks],
            "covered": self.covered,
        }


def deletion_radius(q: int) -> int:
    # balls of a survivor and of any seed must be disjoint: distance > 2q
    return 2 * q


def compute_chunks(n: int, q: int, seeds: Iterable[int], radius: int | None = None) -> ChunkReport:
    seeds = {int(s) for s in seeds if 1 <= int(s) <= n}
    radius = deletion_radius(q) if radius is None else radius
    marks = np.zeros(n + 2, dtype=np.int64)  # difference array over positions 1..n
    for s in seeds | {1, n}:
        lo, hi = s - radius, s + radius
        for a, b in _split_cyclic(lo, hi, n):
            marks[a] += 1
            marks[b + 1] -= 1
    deleted = np.cumsum(marks)[1 : n + 1] > 0
    chunks, covered = [], 0
    i = 0
    while i < n:
        if deleted[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and not deleted[j + 1]:
            j += 1
        if j - i + 1 > q * q:
            chunks.append((i + 1, j + 1))
            covered += j - i + 1
        i = j + 1
    return ChunkReport(seeds, chunks, covered, n, q)


def _split_cyclic(lo: int, hi: int, n: int) -> list[tuple[int, int]]:
    if hi - lo + 1 >= n:
        return [(1, n)]
    lo_m, hi_m = (lo - 1) % n + 1, (hi - 1) % n + 1
    if lo_m <= hi_m:
        return [(lo_m, hi_m)]
    return [(lo_m, n), (1, hi_m)]


@dataclass
class ChunkVerdict:
    tree: int
    chunk: tuple[int, int]
    uniform: bool
    output: bool | None  # common output when uniform
    counterexample: tuple[int, int] | None = None  # two positions that disagree


@dataclass
class UniformityReport:
    chunks: ChunkReport
    verdicts: list[ChunkVerdict]
    cut_fraction: dict[int, float]  # per tree: fraction of vertices forced to be cut
    cut_output: dict[int, float] = field(default_factory=dict)  # per tree: chunk vertices output as cut

    @property
    def all_uniform(self) -> bool:
        return all(v.uniform for v in self.verdicts)

    @property
    def implied_cut_fraction(self) -> float:
        return min(self.cut_fraction.values(), default=0.0)

    def to_json(self) -> dict:
        return {
            **self.chunks.to_json(),
            "all_uniform": self.all_uniform,
            "implied_cut_fraction": self.implied_cut_fraction,
            "cut_output": {str(k): v for k, v in sorted(self.cut_output.items())},
            "verdicts": [
                {"tree": v.tree, "chunk": list(v.chunk), "uniform": v.uniform, "output": v.output}
                for v in self.verdicts
            ],
        }


def sorted_cycle(n: int) -> list[int]:
    return list(range(1, n + 1))


def verify_chunk_uniformity(f: TreeFamily, n: int) -> UniformityReport:
    """Evaluate every tree on every chunk vertex of the sorted ``n``-cycle.

    A uniform chunk longer than ``q`` cannot output not-cut everywhere without
    forming a component larger than ``q``, so its vertices count as cut.
    """
    labels = sorted_cycle(n)
    report = compute_chunks(n, f.q, enumerate_seed_indices(f))
    access = CycleAccess(labels)
    verdicts = []
    cut, out_cut = {}, {}
    for ti, tree in enumerate(f.trees):
        forced = said_cut = 0
        for a, b in report.chunks:
            outs = [run_canonical_oracle(tree, access, labels[pos - 1]) for pos in range(a, b + 1)]
            bad = next(((a, a + i) for i, o in enumerate(outs) if o != outs[0]), None)
            verdicts.append(ChunkVerdict(ti, (a, b), bad is None, outs[0] if bad is None else None, bad))
            said_cut += sum(outs)
            if bad is None:
                forced += b - a + 1
        cut[ti] = forced / n if n else 0.0
        out_cut[ti] = said_cut / report.covered if report.covered else 0.0
    return UniformityReport(report, verdicts, cut, out_cut)


# -- random families and labelings -----------------------------------------


def random_pattern(rng: np.random.Generator, depth: int, q: int) -> Pattern:
    width = depth * (2 * q + 1)
    if depth <= 1:
        return tuple(int(x) + 1 for x in rng.permutation(width))
    return dense_ranks(rng.integers(0, width, size=width).tolist())


def random_tree(
    rng: np.random.Generator,
    q: int,
    n: int,
    *,
    query_depth: int | None = None,
    entries: int = 3,
    index_pool: Sequence[int] | None = None,
) -> CanonicalTree:
    """Random comparison-based tree; node tables assign ``entries`` random
    patterns, and emitted indices come from ``index_pool`` (default ``[1, n]``)."""
    depth = q if query_depth is None else query_depth
    pool = list(index_pool) if index_pool is not None else None

    def pick_index() -> int:
        return int(rng.choice(pool)) if pool else int(rng.integers(1, n + 1))

    def build(level: int) -> Node:
        if level > depth:
            z = Node(level, leaf=True, default=int(rng.integers(0, 2)))
            for _ in range(entries):
                z.table[random_pattern(rng, level, q)] = int(rng.integers(0, 2))
            return z
        z = Node(level, default=pick_index())
        for _ in range(entries):
            z.table[random_pattern(rng, level, q)] = pick_index()
        for idx in sorted(set(z.table.values())):
            if rng.random() < 0.5:
                z.children[idx] = build(level + 1)
        z.fallback = build(level + 1)
        return z

    return CanonicalTree(build(1), q)


def random_family(
    rng: np.random.Generator,
    r: int,
    q: int,
    n: int,
    *,
    entries: int = 3,
    index_pool_size: int | None = None,
) -> TreeFamily:
    pool = None
    if index_pool_size is not None:
        pool = sorted(int(x) for x in rng.choice(np.arange(1, n + 1), size=index_pool_size, replace=False))
    trees = [
        random_tree(rng, q, n, query_depth=int(rng.integers(0, q + 1)), entries=entries, index_pool=pool)
        for _ in range(2**r)
    ]
    return TreeFamily(trees, r, q)


def local_minimum_tree(q: int) -> CanonicalTree:
    """Leaf-only tree that cuts ``u`` iff its label is the smallest in ``B(u)``."""
    width = 2 * q + 1
    leaf = Node(1, leaf=True, default=0)
    for perm in permutations(range(1, width + 1)):
        if perm[q] == 1:
            leaf.table[perm] = 1
    return CanonicalTree(leaf, q)


def order_isomorphic(labels: Sequence[int], rng: np.random.Generator, universe: int | None = None) -> list[int]:
    """A fresh labeling with the same relative order as ``labels``."""
    n = len(labels)
    universe = universe or 10 * n
    fresh = np.sort(rng.choice(np.arange(1, universe + 1), size=n, replace=False))
    rank = np.argsort(np.argsort(np.asarray(labels)))
    return [int(x) for x in fresh[rank]]
