from pathlib import Path

import numpy as np
import pytest

from app.hybrid.fixtures import bowles_inequality, h1_inequality
from app.hybrid.graph import EdgeTag, ExclusivityGraph

DATA = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def h1():
    return h1_inequality()


@pytest.fixture
def bowles():
    return bowles_inequality()


def random_tagged_graph(rng: np.random.Generator, n: int, density: float = 0.4) -> ExclusivityGraph:
    tags = {}
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < density:
                tags[(u, v)] = list(EdgeTag)[int(rng.integers(3))]
    return ExclusivityGraph(n, tags)


@pytest.fixture
def tagged_graphs():
    """Factory: count seeded random tagged graphs with 3..max_n vertices."""

    def make(count: int, max_n: int, seed: int = 7, density: float = 0.4):
        rng = np.random.default_rng(seed)
        return [random_tagged_graph(rng, int(rng.integers(3, max_n + 1)), density) for _ in range(count)]

    return make
