from __future__ import annotations

from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from lrpo.diffusion import DiffVector, lazy_step, ranked, truncate
from lrpo.generators import generate
from lrpo.lowerbound import dense_ranks
from lrpo.randomness import PolyHash

labels = st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=30)


@given(labels, st.integers(1, 50), st.integers(-100, 100))
def test_dense_ranks_invariant_under_monotone_maps(xs, a, c):
    assert dense_ranks(xs) == dense_ranks([a * x + c for x in xs])
    assert dense_ranks(xs) == dense_ranks([x**3 for x in xs])


@given(st.dictionaries(st.integers(1, 49), st.integers(1, 1000), min_size=1, max_size=20))
@settings(max_examples=50)
def test_lazy_step_conserves_mass(weights):
    g = generate("grid", 49)
    total = sum(weights.values())
    x = DiffVector(weights, total)
    y = lazy_step(g, x)
    assert Fraction(sum(y.num.values()), y.den) == 1


@given(st.dictionaries(st.integers(1, 500), st.integers(1, 100), min_size=1, max_size=60),
       st.sampled_from([0.001, 0.01, 0.05, 0.2]))
def test_truncate_bounds(weights, rho):
    x = DiffVector(weights, sum(weights.values()))
    y = truncate(x, rho)
    assert len(y) < 1 / rho
    assert all(y.exact(v) > Fraction(rho) for v in y.support)
    assert all(x.exact(v) <= Fraction(rho) for v in x.support - y.support)
    order = ranked(y)
    assert all(y.num[a] >= y.num[b] for a, b in zip(order, order[1:]))


@given(st.lists(st.integers(0, 2**31 - 2), min_size=1, max_size=8), st.lists(st.integers(0, 2**40), max_size=20))
def test_polyhash_many_matches_horner(coeffs, xs):
    p = 2**31 - 1
    h = PolyHash(p, tuple(coeffs))
    want = [sum(c * pow(x, i, p) for i, c in enumerate(coeffs)) % p for x in xs]
    assert [int(v) for v in h.many(xs)] == want
