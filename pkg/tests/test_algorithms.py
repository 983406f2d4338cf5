import math

import pytest

from conftest import external_edges, random_directed, random_undirected
from nexgraph import algorithms as alg
from nexgraph import oracle
from nexgraph.engine import EngineConfig, run_algorithm
from nexgraph.errors import ParameterError
from nexgraph.ingest import from_edges
from nexgraph.model import INT_MAX

MICRO_EDGES = [(1, 2), (1, 4), (2, 3), (2, 5)]


def micro():
    return from_edges(MICRO_EDGES, undirected=True)


def values_ext(graph, result, pos=1):
    ext = graph.idmap.to_external
    return {ext(v): val[pos - 1] for v, val in result.values.items()}


# -- BFS -----------------------------------------------------------------


def test_bfs_micro_graph():
    g = micro()
    r = run_algorithm(g, alg.bfs(g.idmap.to_internal(1)), EngineConfig(k=3))
    assert values_ext(g, r) == {1: 0, 2: 1, 3: 2, 4: 1, 5: 2}


def test_bfs_singleton_component():
    g = from_edges([(1, 2), (3, 3)], undirected=True)  # self-loop drops; 3 isolated
    r = run_algorithm(g, alg.bfs(g.idmap.to_internal(3)))
    got = values_ext(g, r)
    assert got[3] == 0
    assert got[1] == got[2] == INT_MAX


def test_bfs_path():
    g = from_edges([(1, 2), (2, 3)], undirected=True)
    r = run_algorithm(g, alg.bfs(g.idmap.to_internal(1)))
    assert values_ext(g, r) == {1: 0, 2: 1, 3: 2}


def test_bfs_follows_edge_direction():
    g = from_edges([(0, 1), (1, 2)], undirected=False)
    r = run_algorithm(g, alg.bfs(0))
    assert values_ext(g, r) == {0: 0, 1: 1, 2: 2}
    r = run_algorithm(g, alg.bfs(2))
    assert values_ext(g, r) == {0: INT_MAX, 1: INT_MAX, 2: 0}


def test_bfs_random_matches_oracle():
    g = random_undirected(41, n=90, p=0.05)
    want = oracle.bfs(external_edges(g), 0, list(g.idmap.external))
    r = run_algorithm(g, alg.bfs(g.idmap.to_internal(0)), EngineConfig(k=4))
    assert values_ext(g, r) == want


# -- CC --------------------------------------------------------------------


def test_cc_micro_connected():
    g = micro()
    r = run_algorithm(g, alg.cc(), EngineConfig(k=3))
    # Connected graph: every label is the minimum internal id (vertex 1).
    assert set(values_ext(g, r, pos=1).values()) == {g.idmap.to_internal(1)}


def test_cc_two_disjoint_edges():
    g = from_edges([(1, 2), (3, 4)], undirected=True)
    r = run_algorithm(g, alg.cc(), EngineConfig(k=2))
    labels = {v: val[0] for v, val in r.values.items()}
    t = g.idmap.to_internal
    assert labels == {t(1): t(1), t(2): t(1), t(3): t(3), t(4): t(3)}


def test_cc_random_matches_union_find():
    g = random_undirected(42, n=100, p=0.02)
    r = run_algorithm(g, alg.cc(), EngineConfig(k=4))
    ext = g.idmap.to_external
    got = {ext(v): ext(val[0]) for v, val in r.values.items()}
    assert got == oracle.cc(external_edges(g), list(g.idmap.external))


# -- PR / PPR ------------------------------------------------------------


def test_pr_directed_cycle_uniform():
    g = from_edges([(0, 1), (1, 2), (2, 3), (3, 0)], undirected=False)
    r = run_algorithm(g, alg.pagerank())
    for val in r.values.values():
        assert math.isclose(val[0], 0.25, abs_tol=1e-12)


def test_pr_star_single_iteration():
    # All edges into the center; one iteration from the uniform start.
    g = from_edges([(1, 0), (2, 0), (3, 0)], undirected=False)
    r = run_algorithm(g, alg.pagerank(n_itr=1))
    got = values_ext(g, r)
    assert math.isclose(got[1], 0.15 / 4, abs_tol=1e-15)
    assert math.isclose(got[2], 0.15 / 4, abs_tol=1e-15)
    assert math.isclose(got[0], 0.15 / 4 + 0.85 * (3 * 0.25), abs_tol=1e-15)
    assert math.isclose(got[0], 0.675, abs_tol=1e-15)


def test_pr_random_digraph_matches_matrix_oracle():
    g = random_directed(43, n=50, p=0.08)
    r = run_algorithm(g, alg.pagerank(), EngineConfig(k=4))
    want = oracle.pagerank(external_edges(g), 0.85, 10, list(g.idmap.external))
    got = values_ext(g, r)
    for v in want:
        assert math.isclose(got[v], want[v], rel_tol=1e-12, abs_tol=1e-15), v


def test_pr_rank_sum_conserved_without_danglers():
    # A directed cycle with chords: every vertex has an out-edge.
    n = 30
    edges = [(i, (i + 1) % n) for i in range(n)] + [(i, (i + 7) % n) for i in range(n)]
    g = from_edges(edges, undirected=False)
    for n_itr in (1, 3, 10):
        r = run_algorithm(g, alg.pagerank(n_itr=n_itr))
        assert math.isclose(
            sum(v[0] for v in r.values.values()), 1.0, abs_tol=1e-12
        ), n_itr


def test_pr_exact_ten_main_supersteps():
    g = random_undirected(44, n=40, p=0.1)
    r = run_algorithm(g, alg.pagerank(), EngineConfig(k=2))
    assert r.main_supersteps() == 10


def test_ppr_no_edges():
    g = from_edges([], n=4, undirected=False)
    r = run_algorithm(g, alg.ppr(0, n_itr=1))
    got = {v: val[0] for v, val in r.values.items()}
    assert math.isclose(got[0], 0.15, abs_tol=1e-15)
    assert got[1] == got[2] == got[3] == 0.0


def test_ppr_two_cycle_single_iteration():
    g = from_edges([(0, 1), (1, 0)], undirected=False)
    r = run_algorithm(g, alg.ppr(0, n_itr=1))
    got = {v: val[0] for v, val in r.values.items()}
    assert math.isclose(got[0], 0.15, abs_tol=1e-15)
    assert math.isclose(got[1], 0.85, abs_tol=1e-15)


def test_ppr_random_matches_oracle():
    g = random_directed(45, n=50, p=0.08)
    src = 3
    r = run_algorithm(g, alg.ppr(g.idmap.to_internal(src)), EngineConfig(k=4))
    want = oracle.ppr(external_edges(g), src, 0.85, 10, list(g.idmap.external))
    got = values_ext(g, r)
    for v in want:
        assert math.isclose(got[v], want[v], rel_tol=1e-12, abs_tol=1e-15), v


def test_unknown_source_rejected():
    g = from_edges([(0, 1)], undirected=True)
    with pytest.raises(ParameterError):
        run_algorithm(g, alg.bfs(12))


# -- Core -------------------------------------------------------------------


def test_core_triangle():
    g = from_edges([(0, 1), (1, 2), (0, 2)], undirected=True)
    r = run_algorithm(g, alg.kcore())
    assert {v: val[0] for v, val in r.values.items()} == {0: 2, 1: 2, 2: 2}


def test_core_star():
    g = from_edges([(0, i) for i in range(1, 5)], undirected=True)
    r = run_algorithm(g, alg.kcore())
    assert all(val[0] == 1 for val in r.values.values())


def test_core_random_matches_peeling():
    g = random_undirected(46, n=100, p=0.1)
    r = run_algorithm(g, alg.kcore(), EngineConfig(k=4))
    assert values_ext(g, r) == oracle.kcore(external_edges(g), list(g.idmap.external))


# -- Color --------------------------------------------------------------------


def test_color_k3_descending_id():
    g = from_edges([(1, 2), (2, 3), (1, 3)], undirected=True)
    r = run_algorithm(g, alg.coloring())
    got = values_ext(g, r, pos=2)
    assert got == {3: 0, 2: 1, 1: 2}


def test_color_edgeless_all_zero():
    g = from_edges([], n=5, undirected=True)
    r = run_algorithm(g, alg.coloring())
    assert all(val[1] == 0 for val in r.values.values())


def test_color_random_equals_greedy_oracle():
    g = random_undirected(47, n=100, p=0.1)
    r = run_algorithm(g, alg.coloring(), EngineConfig(k=4))
    got = values_ext(g, r, pos=2)
    assert got == oracle.coloring(external_edges(g), list(g.idmap.external))


def test_color_proper_and_bounded():
    g = random_undirected(48, n=80, p=0.15)
    r = run_algorithm(g, alg.coloring(), EngineConfig(k=2))
    color = {v: val[1] for v, val in r.values.items()}
    deg = {v: 0 for v in color}
    for a, b in g.edges:
        assert color[a] != color[b]
        deg[a] += 1
    assert max(color.values()) <= max(deg.values())  # <= maxdeg + 1 colors


# -- MIS --------------------------------------------------------------------


def test_mis_edgeless_all_in():
    g = from_edges([], n=6, undirected=True)
    r = run_algorithm(g, alg.mis(1), EngineConfig(seed=1))
    assert all(val[0] == alg.IN_SET for val in r.values.values())


def test_mis_k2_exactly_one():
    g = from_edges([(0, 1)], undirected=True)
    r = run_algorithm(g, alg.mis(1), EngineConfig(seed=1))
    states = sorted(val[0] for val in r.values.values())
    assert states == [alg.IN_SET, alg.OUT_SET]


def test_mis_random_valid_and_k_invariant():
    g = random_undirected(49, n=100, p=0.1)
    runs = {
        k: run_algorithm(g, alg.mis(7), EngineConfig(k=k, seed=7)) for k in (1, 2, 4, 8)
    }
    base = runs[1].values
    assert all(r.values == base for r in runs.values())
    member = {
        g.idmap.to_external(v): val[0] == alg.IN_SET for v, val in base.items()
    }
    ok, why = oracle.validate_mis(external_edges(g), member, list(g.idmap.external))
    assert ok, why


def test_mis_different_seeds_differ():
    g = random_undirected(50, n=80, p=0.1)
    a = run_algorithm(g, alg.mis(1), EngineConfig(seed=1)).values
    b = run_algorithm(g, alg.mis(2), EngineConfig(seed=2)).values
    assert a != b  # astronomically unlikely to coincide


# -- MM ---------------------------------------------------------------------


def test_mm_k2_matches_the_edge():
    g = from_edges([(0, 1)], undirected=True)
    r = run_algorithm(g, alg.mm())
    partner = {v: val[2] for v, val in r.values.items()}
    assert partner == {0: 1, 1: 0}


def test_mm_path_three():
    g = from_edges([(1, 2), (2, 3)], undirected=True)
    r = run_algorithm(g, alg.mm(), EngineConfig(k=2))
    t = g.idmap.to_internal
    partner = {v: val[2] for v, val in r.values.items()}
    assert partner[t(1)] == t(2)
    assert partner[t(2)] == t(1)
    assert partner[t(3)] == alg.NO_VERTEX


def test_mm_random_valid_and_k_invariant():
    g = random_undirected(51, n=100, p=0.1)
    runs = {
        k: run_algorithm(g, alg.mm(7), EngineConfig(k=k, seed=7)) for k in (1, 2, 4, 8)
    }
    base = runs[1].values
    assert all(r.values == base for r in runs.values())
    ext = g.idmap.to_external
    partner = {
        ext(v): (ext(val[2]) if val[2] >= 0 else -1) for v, val in base.items()
    }
    ok, why = oracle.validate_mm(external_edges(g), partner, list(g.idmap.external))
    assert ok, why


# -- TC ---------------------------------------------------------------------


def test_tc_triangle():
    g = from_edges([(0, 1), (1, 2), (0, 2)], undirected=True)
    r = run_algorithm(g, alg.tc())
    assert sum(val[0] for val in r.values.values()) == 1


def test_tc_k4():
    g = from_edges(
        [(a, b) for a in range(4) for b in range(a + 1, 4)], undirected=True
    )
    r = run_algorithm(g, alg.tc(), EngineConfig(k=2))
    assert sum(val[0] for val in r.values.values()) == 4


def test_tc_random_matches_bruteforce():
    g = random_undirected(52, n=60, p=0.15)
    r = run_algorithm(g, alg.tc(), EngineConfig(k=4))
    total = sum(val[0] for val in r.values.values())
    edges = external_edges(g)
    verts = list(g.idmap.external)
    assert total == oracle.tc(edges, verts) == oracle.tc_bruteforce(edges, verts)


def test_tc_gather_traffic_counted():
    g = random_undirected(53, n=40, p=0.2)
    r = run_algorithm(g, alg.tc(), EngineConfig(k=4))
    assert r.comm.bytes_data > 0
    assert r.comm.messages > 0


# -- registry ------------------------------------------------------------------


def test_registry_names():
    assert sorted(alg.REGISTRY) == [
        "bfs", "cc", "color", "core", "mis", "mm", "ppr", "pr", "tc",
    ]


def test_build_unknown_name():
    with pytest.raises(ParameterError):
        alg.build("dijkstra")


def test_build_dispatches_params():
    spec = alg.build("bfs", source=3)
    assert spec.params["source"] == 3
