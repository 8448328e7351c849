"""Truncated lazy random-walk diffusion and the cluster subroutine.

Masses are kept as exact rationals: integer numerators over one shared
denominator.  A lazy step multiplies the denominator by ``2d``, so every
mass reachable from an indicator vector is representable without rounding.
Ties between coordinates are therefore genuine ties, which matters for the
level-set test on symmetric graphs (cycles, grids) where rounding noise
would otherwise decide which sets count as value-determined.

Functions taking a graph accept anything with ``d`` and ``neighbors(v)``;
the local oracle passes a query-counting view through the same code.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Protocol

from .errors import DomainError
from .graph import bfs_distances


class Adjacency(Protocol):
    d: int

    def neighbors(self, v: int) -> tuple[int, ...]: ...


class DiffVector:
    """Sparse nonnegative vector ``{label: num / den}``."""

    __slots__ = ("num", "den")

    def __init__(self, num: Mapping[int, int], den: int = 1) -> None:
        self.num = {v: c for v, c in num.items() if c > 0}
        self.den = den

    @classmethod
    def indicator(cls, v: int) -> "DiffVector":
        return cls({v: 1}, 1)

    @classmethod
    def from_masses(cls, masses: Mapping[int, float]) -> "DiffVector":
        fr = {v: Fraction(m) for v, m in masses.items()}
        den = 1
        for f in fr.values():
            den = den * f.denominator // _gcd(den, f.denominator)
        return cls({v: int(f * den) for v, f in fr.items()}, den)

    def mass(self, v: int) -> float:
        return self.num.get(v, 0) / self.den

    def exact(self, v: int) -> Fraction:
        return Fraction(self.num.get(v, 0), self.den)

    def items(self) -> Iterator[tuple[int, float]]:
        for v, c in self.num.items():
            yield v, c / self.den

    def as_dict(self) -> dict[int, float]:
        return dict(self.items())

    @property
    def support(self) -> set[int]:
        return set(self.num)

    @property
    def total(self) -> float:
        return float(Fraction(sum(self.num.values()), self.den))

    def __len__(self) -> int:
        return len(self.num)

    def __contains__(self, v: object) -> bool:
        return v in self.num

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiffVector):
            return NotImplemented
        return self.num.keys() == other.num.keys() and all(
            c * other.den == other.num[v] * self.den for v, c in self.num.items()
        )

    def __repr__(self) -> str:
        inner = ", ".join(f"{v}: {m:.6g}" for v, m in sorted(self.items()))
        return f"DiffVector({{{inner}}})"


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def lazy_step(g: Adjacency, x: DiffVector) -> DiffVector:
    """One step of the symmetric lazy walk ``M``: a vertex keeps ``1 - deg/2d``
    of its mass and sends ``1/2d`` along each incident edge."""
    two_d = 2 * g.d
    if two_d == 0:
        return DiffVector(x.num, x.den)
    out: dict[int, int] = {}
    get = out.get
    for u, c in x.num.items():
        nb = g.neighbors(u)
        out[u] = get(u, 0) + c * (two_d - len(nb))
        for w in nb:
            out[w] = get(w, 0) + c
    return DiffVector(out, x.den * two_d)


def truncate(x: DiffVector, rho: float) -> DiffVector:
    """Zero every coordinate with mass ``<= rho``."""
    a, b = Fraction(rho).as_integer_ratio()
    cut = a * x.den // b  # num > cut  <=>  num/den > rho
    return DiffVector({v: c for v, c in x.num.items() if c > cut}, x.den)


def trunc_diffusion(g: Adjacency, v: int, t: int, rho: float) -> DiffVector:
    if t < 0:
        raise DomainError("t must be nonnegative")
    g.neighbors(v)  # raises for unknown labels
    x = DiffVector.indicator(v)
    for _ in range(t):
        x = truncate(lazy_step(g, x), rho)
    return x


def ranked(x: DiffVector) -> list[int]:
    """Support sorted by decreasing mass, ties by smaller label."""
    num = x.num
    return sorted(num, key=lambda u: (-num[u], u))


def level_set(x: DiffVector, k: int) -> set[int]:
    if k < 1:
        raise DomainError("k must be at least 1")
    return set(ranked(x)[:k])


def is_value_determined(x: DiffVector, k: int) -> bool:
    """True when the top-``k`` set does not depend on tie-breaking."""
    order = ranked(x)
    if k >= len(order):
        return True
    return k == 0 or x.num[order[k - 1]] != x.num[order[k]]


def boundary_size(g: Adjacency, S: Iterable[int]) -> int:
    S = set(S)
    return sum(1 for u in S for w in g.neighbors(u) if w not in S)


def conductance(g: Adjacency, S: Iterable[int]) -> float:
    """``|E(S, V \\ S)| / (d |S|)``."""
    S = set(S)
    if not S:
        raise DomainError("conductance of the empty set")
    if g.d == 0:
        return 0.0
    return boundary_size(g, S) / (g.d * len(S))


@dataclass(frozen=True)
class ClusterResult:
    members: frozenset[int]
    center: int
    t_used: int
    k_used: int | None
    conductance: float | None
    is_singleton: bool


def _acceptable_prefixes(
    g: Adjacency, v: int, x: DiffVector, phi: float
) -> tuple[tuple[int, ...], tuple[tuple[int, float], ...]]:
    """Ranked support of ``x`` and every prefix length ``j`` whose level set
    ``L`` is value-determined with ``Phi(L + {v}) < phi``, with that conductance.

    Boundary counts are updated incrementally as the prefix grows.
    """
    order = tuple(ranked(x))
    num = x.num
    L = len(order)
    d = g.d
    S = {v}
    boundary = len(g.neighbors(v))
    ok: list[tuple[int, float]] = []
    if L == 0:
        cond = boundary / d if d else 0.0
        if cond < phi:
            ok.append((0, cond))
        return order, tuple(ok)
    for j, y in enumerate(order, start=1):
        if y not in S:
            nb = g.neighbors(y)
            inside = 0
            for z in nb:
                if z in S:
                    inside += 1
            boundary += len(nb) - 2 * inside
            S.add(y)
        if j == L or num[y] != num[order[j]]:
            cond = boundary / (d * len(S)) if d else 0.0
            if cond < phi:
                ok.append((j, cond))
    return order, tuple(ok)


def _pick(order: tuple[int, ...], ok: tuple[tuple[int, float], ...], k: int) -> tuple[int, int, float] | None:
    """First accepted ``k'`` in ``[k, 2k]``; returns ``(k', prefix length, conductance)``."""
    L = len(order)
    if k > L:
        for j, cond in ok:
            if j == L:
                return k, L, cond
        return None
    hi = min(2 * k, L)
    for j, cond in ok:
        if j > hi:
            break
        if j >= k:
            return j, j, cond
    return None


def _result(v: int, t: int, order, ok, k: int) -> ClusterResult:
    hit = _pick(order, ok, k)
    if hit is None:
        return ClusterResult(frozenset((v,)), v, t, None, None, True)
    k_used, j, cond = hit
    return ClusterResult(frozenset(order[:j]) | {v}, v, t, k_used, cond, False)


def cluster(g: Adjacency, v: int, t: int, k: int, params) -> ClusterResult:
    """Scan ``k' = k..2k`` over the level sets of the ``t``-step truncated
    diffusion from ``v``; accept the first value-determined level set ``L`` with
    ``Phi(L + {v}) < phi``; otherwise return the singleton ``{v}``."""
    if k < 1:
        raise DomainError("k must be at least 1")
    x = trunc_diffusion(g, v, t, params.rho)
    order, ok = _acceptable_prefixes(g, v, x, params.phi)
    return _result(v, t, order, ok, k)


def inverse_ball(g: Adjacency, v: int, params) -> set[int]:
    """All ``w`` whose truncated diffusion has ``v`` in its support for some
    ``t in [0, ell]``.  Only vertices within distance ``ell`` can qualify."""
    out = set()
    for w in bfs_distances(g, v, params.ell):
        x = DiffVector.indicator(w)
        if w == v:
            out.add(w)
            continue
        for _ in range(params.ell):
            x = truncate(lazy_step(g, x), params.rho)
            if v in x.num:
                out.add(w)
                break
            if not x.num:
                break
    return out


class ClusterEngine:
    """Memoized cluster tables for one graph and parameter set.

    Results are pure functions of ``(graph, params, v, t, k)``; the caches only
    save work and may be cleared at any time.  The tables for all ``t`` of a
    center are built from one diffusion run, and the diffusion vectors
    themselves are kept only when :meth:`diffusion` asks for them.
    """

    def __init__(self, g: Adjacency, params, max_vertices: int = 200_000) -> None:
        self.g = g
        self.rho = params.rho
        self.phi = params.phi
        self.ell = params.ell
        self.max_vertices = max_vertices
        self._seq: dict[int, list[DiffVector]] = {}
        self._tabs: dict[int, list] = {}
        self._good: dict[tuple[int, int], tuple[tuple[int, ...], ...]] = {}
        self._ib: dict[int, frozenset[int]] = {}

    def clear(self) -> None:
        self._seq.clear()
        self._tabs.clear()
        self._good.clear()
        self._ib.clear()

    def diffusion(self, v: int, t: int) -> DiffVector:
        seq = self._seq.get(v)
        if seq is None:
            if len(self._seq) >= self.max_vertices:
                self._seq.clear()
            self.g.neighbors(v)
            seq = self._seq[v] = [DiffVector.indicator(v)]
        while len(seq) <= t:
            seq.append(truncate(lazy_step(self.g, seq[-1]), self.rho))
        return seq[t]

    def _tables(self, v: int) -> list:
        tabs = self._tabs.get(v)
        if tabs is None:
            if len(self._tabs) >= self.max_vertices:
                self._tabs.clear()
                self._good.clear()
            seq = self._seq.get(v)
            x = DiffVector.indicator(v)
            self.g.neighbors(v)
            tabs = [_acceptable_prefixes(self.g, v, x, self.phi)]
            for t in range(1, self.ell + 1):
                x = seq[t] if seq is not None and t < len(seq) else truncate(lazy_step(self.g, x), self.rho)
                tabs.append(_acceptable_prefixes(self.g, v, x, self.phi))
            self._tabs[v] = tabs
        return tabs

    def table(self, v: int, t: int):
        if 0 <= t <= self.ell:
            return self._tables(v)[t]
        return _acceptable_prefixes(self.g, v, self.diffusion(v, t), self.phi)

    def cluster(self, v: int, t: int, k: int) -> ClusterResult:
        order, ok = self.table(v, t)
        return _result(v, t, order, ok, k)

    def members(self, v: int, t: int, k: int) -> tuple[int, ...] | None:
        """Members of a non-singleton cluster, or None for the singleton fallback."""
        order, ok = self.table(v, t)
        hit = _pick(order, ok, k)
        if hit is None:
            return None
        prefix = order[: hit[1]]
        return prefix if v in prefix else (v, *prefix)

    def good_clusters(self, v: int, k: int) -> tuple[tuple[int, ...], ...]:
        """Members of every non-singleton ``cluster(v, t, k)`` for ``t`` in ``[1, ell]``."""
        key = (v, k)
        got = self._good.get(key)
        if got is None:
            out = []
            for t in range(1, self.ell + 1):
                m = self.members(v, t, k)
                if m is not None:
                    out.append(m)
            got = self._good[key] = tuple(out)
        return got

    def inverse_ball(self, v: int) -> frozenset[int]:
        ib = self._ib.get(v)
        if ib is None:
            out = []
            for w in bfs_distances(self.g, v, self.ell):
                if w == v or any(v in self.diffusion(w, t).num for t in range(1, self.ell + 1)):
                    out.append(w)
            ib = self._ib[v] = frozenset(out)
        return ib
