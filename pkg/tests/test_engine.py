import math

import pytest

from conftest import build_structures, random_undirected, run_built
from nexgraph import algorithms as alg
from nexgraph.engine import (
    FIXED,
    UNTIL_QUIESCENT,
    AlgorithmSpec,
    EngineConfig,
    Plan,
    run_algorithm,
)
from nexgraph.errors import ConfigError, ExpressionError
from nexgraph.ingest import from_edges
from nexgraph.model import INT_MAX, make_schema

INT_SCHEMA = make_schema([("x", "int64")])


def simple_spec(ne, mode=UNTIL_QUIESCENT, n_itr=1, init=None, **kw):
    plans = []
    if init is not None:
        plans.append(Plan(ne=init, mode=FIXED, n_itr=1, kind="init"))
    plans.append(Plan(ne=ne, mode=mode, n_itr=n_itr, **kw))
    return AlgorithmSpec(name="test", schema=INT_SCHEMA, plans=tuple(plans))


def path_graph(n):
    return from_edges([(i, i + 1) for i in range(n - 1)], undirected=True)


def test_fixed_one_constant_write_reaches_fixpoint():
    g = path_graph(3)
    spec = simple_spec(lambda ctx: ctx.value, mode=FIXED, n_itr=1)
    r = run_algorithm(g, spec)
    assert r.plan_supersteps == [1]
    assert r.stats[-1].n_change == 0


def test_until_quiescent_halts_after_one_idle_superstep():
    g = path_graph(3)
    spec = simple_spec(lambda ctx: None)
    r = run_algorithm(g, spec)
    assert r.plan_supersteps == [1]


def test_fixed_runs_exactly_n_even_when_quiet():
    g = path_graph(3)
    spec = simple_spec(lambda ctx: ctx.value, mode=FIXED, n_itr=5)
    r = run_algorithm(g, spec)
    assert r.plan_supersteps == [5]
    assert all(s.n_change == 0 for s in r.stats)


def test_superstep_isolation_shadow_writes():
    # x += neighbor sum; both vertices must read the *old* neighbor value.
    g = path_graph(2)
    init = lambda ctx: (ctx.id + 1,)  # values 1, 2

    def ne(ctx):
        return (ctx.value[0] + sum(v[0] for _, v in ctx.neighbors()),)

    spec = simple_spec(ne, mode=FIXED, n_itr=1, init=init)
    r = run_algorithm(g, spec)
    assert r.values[0] == (1 + 2,)
    assert r.values[1] == (2 + 1,)  # sequential in-place would give 2+3


def test_abstain_leaves_value_and_counts_unchanged():
    g = path_graph(2)

    def ne(ctx):
        return (9,) if ctx.id == 0 else None

    spec = simple_spec(ne, mode=FIXED, n_itr=1)
    r = run_algorithm(g, spec)
    assert r.values[0] == (9,)
    assert r.values[1] == (0,)
    assert r.stats[-1].n_change == 1


def test_equal_write_counts_as_unchanged():
    g = path_graph(2)
    spec = simple_spec(lambda ctx: (0,), mode=UNTIL_QUIESCENT)
    r = run_algorithm(g, spec)
    assert r.plan_supersteps == [1]
    assert r.stats[-1].n_change == 0


def test_bfs_first_superstep_updates_exactly_source_neighbors():
    g = random_undirected(31, n=40, p=0.15)
    src = 0
    deg = sum(1 for a, b in g.edges if a == src)
    r = run_algorithm(g, alg.bfs(src), EngineConfig(k=2))
    main = [s for s in r.stats if s.plan == 1]
    assert main[0].n_change == deg


def test_activation_neighbor_mode_wakes_readers():
    # Counter records who evaluates each superstep under forced neighbor mode.
    g = path_graph(4)  # 0-1-2-3
    evaluated = []

    def init(ctx):
        return (0 if ctx.id == 0 else INT_MAX,)

    def ne(ctx):
        evaluated.append((ctx.superstep, ctx.id))
        best = ctx.value[0]
        for _, v in ctx.neighbors():
            best = min(best, v[0] + 1)
        return (best,)

    spec = simple_spec(ne, init=init, access_mode="all")
    r = run_algorithm(g, spec, EngineConfig(k=2, activation_policy="neighbor"))
    assert r.values == {0: (0,), 1: (1,), 2: (2,), 3: (3,)}
    by_step = {}
    for s, v in evaluated:
        by_step.setdefault(s, set()).add(v)
    # Superstep 2 is the first main superstep (all active). Vertex 1 changes
    # there; vertex 2 reads it, so it must be active in superstep 3.
    assert 2 in by_step[3]
    # Quiescent tail: nothing evaluated after convergence superstep.
    last = max(by_step)
    assert by_step[last] and r.stats[-1].n_change == 0


def test_quiescence_empties_active_set_under_all_policies():
    g = path_graph(3)
    for policy in ("auto", "neighbor", "all"):
        spec = simple_spec(lambda ctx: (7,), mode=UNTIL_QUIESCENT)
        r = run_algorithm(g, spec, EngineConfig(activation_policy=policy))
        # superstep 1: all change; superstep 2: equal write; halt.
        assert r.plan_supersteps == [2]


def test_auto_mode_log_matches_threshold_rule():
    # Star (big frontier) feeding a path (frontier of one): the change count
    # crosses theta in both directions.
    star = [(0, i) for i in range(1, 11)]
    tail = [(i, i + 1) for i in range(10, 16)]
    g = from_edges(star + tail, undirected=True)
    theta = 5
    r = run_algorithm(g, alg.bfs(0), EngineConfig(k=2, theta=theta))
    by_plan = {}
    for s in r.stats:
        by_plan.setdefault(s.plan, []).append(s)
    saw = set()
    for steps in by_plan.values():
        for prev, cur in zip(steps, steps[1:]):
            expect_all = prev.n_change >= theta and prev.n_change > 0
            assert (cur.activation_mode == "all") == expect_all
            saw.add(cur.activation_mode)
    assert saw == {"all", "neighbor"}, "theta never produced a switch"


def test_plan_openers_activate_every_host():
    g = random_undirected(33, n=50, p=0.1)
    r = run_algorithm(g, alg.cc(), EngineConfig(k=2))
    for s in r.stats:
        if s.superstep_in_plan == 1:
            assert s.active_count == g.meta.n
            assert s.activation_mode == "all"


def test_pagerank_cycle_stays_uniform_each_superstep():
    g = from_edges([(0, 1), (1, 2), (2, 3), (3, 0)], undirected=False)
    r = run_algorithm(g, alg.pagerank(), EngineConfig(k=2))
    for v, val in r.values.items():
        assert math.isclose(val[0], 0.25, rel_tol=0, abs_tol=1e-12)
    vals = list(r.values.values())
    assert all(v == vals[0] for v in vals)


def test_color_star_two_rounds():
    g = from_edges([(0, 1), (0, 2), (0, 3)], undirected=True)
    r = run_algorithm(g, alg.coloring(), EngineConfig(k=2))
    assert r.values[0] == (3, 0)
    for leaf in (1, 2, 3):
        assert r.values[leaf] == (1, 1)


def test_empty_graph_runs_zero_supersteps():
    g = from_edges([], n=0, undirected=True)
    r = run_algorithm(g, alg.cc())
    assert r.values == {}
    assert r.plan_supersteps == []
    assert r.comm.bytes_data == 0


def test_max_superstep_guard():
    g = path_graph(3)

    def ne(ctx):
        return (ctx.value[0] + 1,)  # never converges

    spec = simple_spec(ne)
    with pytest.raises(ConfigError):
        run_algorithm(g, spec, EngineConfig(max_supersteps=5))


def test_expression_error_carries_context():
    g = path_graph(3)

    def ne(ctx):
        if ctx.id == 1:
            raise ValueError("boom")
        return None

    with pytest.raises(ExpressionError) as err:
        run_algorithm(g, simple_spec(ne), EngineConfig(k=2))
    assert err.value.vertex == 1
    assert err.value.superstep == 1


def test_expression_error_unwinds_all_workers():
    g = path_graph(6)

    def ne(ctx):
        if ctx.id == 0:
            raise RuntimeError("fail fast")
        return None

    with pytest.raises(ExpressionError):
        run_algorithm(g, simple_spec(ne), EngineConfig(k=3, barrier_timeout=5.0))


def test_ctx_random_is_keyed_on_seed_vertex_superstep():
    g = path_graph(2)
    draws = {}

    def ne(ctx):
        draws.setdefault((ctx.id, ctx.superstep), []).append(
            (ctx.random(), ctx.random())
        )
        return (ctx.value[0] + 1,) if ctx.superstep < 3 else None

    run_algorithm(g, simple_spec(ne), EngineConfig(seed=5))
    first = dict(draws)
    draws.clear()
    run_algorithm(g, simple_spec(ne), EngineConfig(seed=5))
    assert draws == first  # reproducible
    assert draws[(0, 1)] != draws[(1, 1)]  # vertex-keyed
    assert draws[(0, 1)] != draws[(0, 2)]  # superstep-keyed
    a, b = draws[(0, 1)][0]
    assert a != b and 0.0 <= a < 1.0 and 0.0 <= b < 1.0
    run_algorithm(g, simple_spec(ne), EngineConfig(seed=6))
    assert draws[(0, 1)] != first[(0, 1)]  # seed-keyed


def test_value_of_rejects_non_neighbors():
    g = path_graph(3)  # 0-1-2; 0 and 2 are not adjacent

    def ne(ctx):
        if ctx.id == 0:
            ctx.value_of(2)
        return None

    with pytest.raises(ExpressionError):
        run_algorithm(g, simple_spec(ne))


def test_guest_consistency_instrumentation_counts():
    g = random_undirected(34, n=60, p=0.1)
    r = run_algorithm(g, alg.coloring(), EngineConfig(k=4, check_guests=True))
    assert r.consistency_checks > 0
    assert r.consistency_violations == []


def test_worker_count_invariance_all_algorithms():
    g = random_undirected(35, n=70, p=0.1)
    specs = [
        alg.bfs(3),
        alg.cc(),
        alg.pagerank(),
        alg.ppr(3),
        alg.kcore(),
        alg.coloring(),
        alg.mis(11),
        alg.mm(11),
        alg.tc(),
    ]
    for spec in specs:
        base = run_algorithm(g, spec, EngineConfig(k=1, seed=11)).values
        for k in (2, 4, 8):
            got = run_algorithm(g, spec, EngineConfig(k=k, seed=11)).values
            assert got == base, (spec.name, k)


def test_multi_plan_reactivates_all_hosts():
    g = path_graph(3)
    seen = []

    def ne_a(ctx):
        return (1,)

    def ne_b(ctx):
        seen.append(ctx.id)
        return None

    spec = AlgorithmSpec(
        name="two-plans",
        schema=INT_SCHEMA,
        plans=(
            Plan(ne=ne_a, mode=UNTIL_QUIESCENT),
            Plan(ne=ne_b, mode=FIXED, n_itr=1),
        ),
    )
    run_algorithm(g, spec)
    assert sorted(seen) == [0, 1, 2]


def test_requires_symmetric_enforced():
    g = from_edges([(0, 1)], undirected=False)
    with pytest.raises(Exception) as err:
        run_algorithm(g, alg.cc())
    assert "undirected" in str(err.value)


def test_shared_structures_reusable_across_runs(micro):
    parts, stores = build_structures(micro, 3)
    a = run_built(micro, parts, stores, alg.cc())
    b = run_built(micro, parts, stores, alg.coloring())
    assert all(v == (0,) for v in a.values.values())  # min internal id is 0
    assert len(b.values) == 5


def test_sync_phase_fans_out_to_guest_holders_only(micro):
    # A change at v2 must reach exactly the workers of v1 and v3.
    from nexgraph.engine import Worker
    from nexgraph.transport import InProcessTransport, decode_sync

    parts, stores = build_structures(micro, 3)
    t = micro.idmap.to_internal
    part = next(p for p in parts if t(2) in p.host_ids)
    transport = InProcessTransport(3)
    spec = alg.coloring()
    worker = Worker(part, stores[part.worker_id], transport, EngineConfig(k=3),
                    spec.schema, micro.meta)
    slot2 = part.slot_of[t(2)]
    worker.values[slot2] = (3, 1)
    worker.sync_phase(spec.plans[1], [slot2])
    stats = transport.comm_stats()
    assert stats.messages == 2
    assert stats.bytes_data == 2 * 18  # one critical int64 entry per message
    w1 = next(p for p in parts if t(1) in p.host_ids).worker_id
    w3 = next(p for p in parts if t(3) in p.host_ids).worker_id
    for target in (w1, w3):
        (delivery,) = transport._pending[target][part.worker_id]
        vertex, entries = decode_sync(delivery.data, spec.schema.kinds)
        assert vertex == t(2)
        assert entries == [(2, 1)]  # color only, not the degree


def test_activation_phase_uses_inverse_index(micro):
    # v2 changed remotely; the worker hosting v1 and v4 activates I(v2') = {v1}.
    from nexgraph.engine import Worker
    from nexgraph.transport import InProcessTransport

    parts, stores = build_structures(micro, 3)
    t = micro.idmap.to_internal
    part = next(p for p in parts if t(1) in p.host_ids)
    spec = alg.coloring()
    worker = Worker(part, stores[part.worker_id], InProcessTransport(3),
                    EngineConfig(k=3), spec.schema, micro.meta)
    guest_slot = part.slot_of[t(2)]
    worker.activation_phase([], [guest_slot], "neighbor", n_change_total=1)
    assert worker.active == {part.slot_of[t(1)]}
