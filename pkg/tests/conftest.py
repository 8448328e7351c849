from __future__ import annotations

import numpy as np
import pytest

from lrpo.generators import cycle, generate, grid
from lrpo.graph import Graph
from lrpo.randomness import Params, SeedBundle


def seeded(params: Params, g: Graph, seed: int = 0) -> SeedBundle:
    return SeedBundle.random(params, g.N, g.n, np.random.default_rng(seed))


@pytest.fixture
def cycle4() -> Graph:
    return cycle(4)


@pytest.fixture
def cycle40() -> Graph:
    return cycle(40)


@pytest.fixture
def grid8() -> Graph:
    return grid(64)


@pytest.fixture
def outerplanar30() -> Graph:
    return generate("random-outerplanar", 30, rng_seed=3, shuffle=True)


@pytest.fixture
def single() -> Graph:
    return Graph([5], [[]], d=2, N=10)
