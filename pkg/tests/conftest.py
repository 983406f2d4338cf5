"""Shared fixtures: the 5-vertex micro graph and seeded random graphs."""

from __future__ import annotations

import random

import pytest

from nexgraph.engine import Engine, EngineConfig
from nexgraph.ingest import from_edges
from nexgraph.partition import build_all
from nexgraph.storage import IndexStore
from nexgraph.transport import InProcessTransport

# Undirected micro graph used throughout: edges 1-2, 1-4, 2-3, 2-5.
# With three workers and dense re-iding, hosts land as
# w0={1,4}, w1={2,5}, w2={3}.
MICRO_EDGES = [(1, 2), (1, 4), (2, 3), (2, 5)]


@pytest.fixture
def micro():
    return from_edges(MICRO_EDGES, undirected=True)


def random_undirected(seed: int, n: int | None = None, p: float | None = None):
    rng = random.Random(seed)
    n = n or rng.randint(10, 200)
    p = p or rng.choice([0.02, 0.1, 0.3])
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]
    return from_edges(edges, n=n, undirected=True)


def random_directed(seed: int, n: int = 50, p: float = 0.08):
    rng = random.Random(seed)
    edges = [
        (a, b) for a in range(n) for b in range(n) if a != b and rng.random() < p
    ]
    return from_edges(edges, n=n, undirected=False)


def external_edges(graph):
    ext = graph.idmap.to_external
    return [(ext(a), ext(b)) for a, b in graph.edges]


def run_built(graph, parts, stores, spec, **cfg_kw):
    """Run on prebuilt structures with a fresh transport and engine."""
    k = parts[0].k
    config = EngineConfig(k=k, **cfg_kw)
    transport = InProcessTransport(k, config.barrier_timeout)
    engine = Engine(graph.meta, parts, stores, transport, config, spec.schema)
    return engine.run(spec)


def build_structures(graph, k: int):
    parts, idxs = build_all(graph, k)
    stores = [IndexStore.build(p, i) for p, i in zip(parts, idxs)]
    return parts, stores
