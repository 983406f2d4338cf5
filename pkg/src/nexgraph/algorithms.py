"""The benchmark algorithm suite, each expressed as a plan sequence.

Every algorithm is a schema plus plans whose expressions read only the
vertex's own value and its direct neighbors. Randomized programs (MIS,
and MM's reserved seed) key their draws on (seed, vertex id) so outcomes
are identical for any worker count.
"""

from __future__ import annotations

import hashlib

from .engine import FIXED, UNTIL_QUIESCENT, AlgorithmSpec, Plan
from .errors import ParameterError
from .model import INT_MAX, make_schema

UNDECIDED, IN_SET, OUT_SET = 0, 1, 2
NO_VERTEX = -1


def _priority(seed: int, vid: int) -> int:
    """Stable per-vertex 64-bit draw used for symmetry breaking."""
    digest = hashlib.sha256(f"{seed}:{vid}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def bfs(source: int) -> AlgorithmSpec:
    """Hop distances from a source along in-neighbor lists.

    Distance of unreached vertices stays at the INT_MAX sentinel; sentinel
    arithmetic cannot overflow the int64 slot.
    """
    schema = make_schema([("dis", "int64")])

    def init(ctx):
        return (0,) if ctx.id == source else (INT_MAX,)

    def relax(ctx):
        best = ctx.value[0]
        for _, val in ctx.neighbors():
            d = val[0] + 1
            if d < best:
                best = d
        return (best,)

    return AlgorithmSpec(
        name="bfs",
        schema=schema,
        plans=(
            Plan(ne=init, mode=FIXED, n_itr=1, kind="init", label="seed-distance"),
            Plan(ne=relax, mode=UNTIL_QUIESCENT, access_mode="in", label="relax"),
        ),
        params={"source": source},
    )


def cc() -> AlgorithmSpec:
    """Connected components by minimum-label propagation."""
    schema = make_schema([("label", "int64")])

    def init(ctx):
        return (ctx.id,)

    def spread(ctx):
        best = ctx.value[0]
        for _, val in ctx.neighbors():
            if val[0] < best:
                best = val[0]
        return (best,)

    return AlgorithmSpec(
        name="cc",
        schema=schema,
        plans=(
            Plan(ne=init, mode=FIXED, n_itr=1, kind="init", label="own-label"),
            Plan(ne=spread, mode=UNTIL_QUIESCENT, access_mode="all", label="min-label"),
        ),
        requires_symmetric=True,
        id_attrs=frozenset({1}),
    )


def pagerank(damping: float = 0.85, n_itr: int = 10) -> AlgorithmSpec:
    """Synchronous rank iteration from a uniform start.

    rank(v) = (1-a)/n + a * sum over in-neighbors u of rank(u)/outdeg(u).
    Dangling vertices feed nobody, so their mass leaks by design.
    In-flow is accumulated in ascending neighbor-id order, which keeps
    results bit-identical across worker counts.
    """
    schema = make_schema([("rank", "float64")])

    def init(ctx):
        return (1.0 / ctx.n_vertices,)

    def rank(ctx):
        flow = 0.0
        for u, val in ctx.neighbors():
            flow += val[0] / ctx.degree_of(u, "out")
        return ((1.0 - damping) / ctx.n_vertices + damping * flow,)

    return AlgorithmSpec(
        name="pr",
        schema=schema,
        plans=(
            Plan(ne=init, mode=FIXED, n_itr=1, kind="init", label="uniform"),
            Plan(ne=rank, mode=FIXED, n_itr=n_itr, access_mode="in", label="rank"),
        ),
        params={"damping": damping, "n_itr": n_itr},
    )


def ppr(source: int, damping: float = 0.85, n_itr: int = 10) -> AlgorithmSpec:
    """Personalized rank: all teleport mass returns to the source."""
    schema = make_schema([("rank", "float64")])

    def init(ctx):
        return (1.0,) if ctx.id == source else (0.0,)

    def rank(ctx):
        flow = 0.0
        for u, val in ctx.neighbors():
            flow += val[0] / ctx.degree_of(u, "out")
        teleport = (1.0 - damping) if ctx.id == source else 0.0
        return (teleport + damping * flow,)

    return AlgorithmSpec(
        name="ppr",
        schema=schema,
        plans=(
            Plan(ne=init, mode=FIXED, n_itr=1, kind="init", label="point-mass"),
            Plan(ne=rank, mode=FIXED, n_itr=n_itr, access_mode="in", label="rank"),
        ),
        params={"source": source, "damping": damping, "n_itr": n_itr},
    )


def kcore() -> AlgorithmSpec:
    """Coreness via repeated h-index refinement of neighbor estimates.

    Estimates start at the degree and only ever decrease; the fixpoint is
    the peeling coreness.
    """
    schema = make_schema([("core", "int64")])

    def init(ctx):
        return (ctx.degree("all"),)

    def refine(ctx):
        ests = sorted((val[0] for _, val in ctx.neighbors()), reverse=True)
        h = 0
        for i, e in enumerate(ests):
            if e >= i + 1:
                h = i + 1
            else:
                break
        return (min(ctx.value[0], h),)

    return AlgorithmSpec(
        name="core",
        schema=schema,
        plans=(
            Plan(ne=init, mode=FIXED, n_itr=1, kind="init", label="degree"),
            Plan(ne=refine, mode=UNTIL_QUIESCENT, access_mode="all", label="h-index"),
        ),
        requires_symmetric=True,
    )


def coloring() -> AlgorithmSpec:
    """Greedy coloring in descending (degree, id) priority order.

    A vertex waits until all higher-priority neighbors are colored, then
    takes the smallest color none of them uses. Only the color attribute
    is critical; the degree is shipped once at initialization.
    """
    schema = make_schema([("deg", "int64"), ("color", "int64")])

    def init(ctx):
        return (ctx.degree("all"), -1)

    def pick(ctx):
        deg, _ = ctx.value
        me = (deg, ctx.id)
        used = set()
        for u, val in ctx.neighbors():
            if (val[0], u) > me:
                if val[1] == -1:
                    return None  # a higher-priority neighbor is not done yet
                used.add(val[1])
        color = 0
        while color in used:
            color += 1
        return (deg, color)

    return AlgorithmSpec(
        name="color",
        schema=schema,
        plans=(
            Plan(ne=init, mode=FIXED, n_itr=1, kind="init", label="degree"),
            Plan(
                ne=pick,
                mode=UNTIL_QUIESCENT,
                access_mode="all",
                critical=frozenset({2}),
                label="greedy-color",
            ),
        ),
        requires_symmetric=True,
    )


def mis(seed: int | None = None) -> AlgorithmSpec:
    """Maximal independent set with random vertex priorities.

    Each vertex holds a fixed draw keyed on (seed, id); a vertex joins the
    set once it beats every still-undecided neighbor (ties broken by id),
    and leaves once any neighbor joined. Both endpoints derive a draw from
    the neighbor's id alone, so nothing extra is transmitted.
    """
    schema = make_schema([("state", "int64")])

    def init(ctx):
        return (UNDECIDED,)

    def step(ctx):
        if ctx.value[0] != UNDECIDED:
            return None
        s = seed if seed is not None else ctx.seed
        mine = (_priority(s, ctx.id), ctx.id)
        rivals = []
        for u, val in ctx.neighbors():
            if val[0] == IN_SET:
                return (OUT_SET,)
            if val[0] == UNDECIDED:
                rivals.append(u)
        for u in rivals:
            if (_priority(s, u), u) < mine:
                return None
        return (IN_SET,)

    return AlgorithmSpec(
        name="mis",
        schema=schema,
        plans=(
            Plan(ne=init, mode=FIXED, n_itr=1, kind="init", label="undecided"),
            Plan(ne=step, mode=UNTIL_QUIESCENT, access_mode="all", label="luby-round"),
        ),
        params={"seed": seed},
        requires_symmetric=True,
    )


def mm(seed: int | None = None) -> AlgorithmSpec:
    """Maximal matching by min-id propose / accept / confirm rounds.

    Rounds are three supersteps keyed on the plan-local superstep: propose
    (unmatched vertices point at their smallest unmatched neighbor), accept
    (pick the smallest proposer), confirm (both endpoints observe the same
    propose/accept pair and record the match). The confirm predicate also
    requires the proposer to have accepted nobody else, which is what keeps
    one vertex from being claimed twice.

    Freshly matched vertices clear their proposal/acceptance in the next
    propose superstep. That write does double duty: it leaves a canonical
    final state, and — being a change — it re-activates the neighbors for
    the following accept superstep, so a match is never observable only
    through an attribute older than one phase. The seed is reserved; the
    min-id rules make every round deterministic already.
    """
    schema = make_schema([("prop", "int64"), ("acc", "int64"), ("partner", "int64")])

    def init(ctx):
        return (NO_VERTEX, NO_VERTEX, NO_VERTEX)

    def step(ctx):
        prop, acc, partner = ctx.value
        if partner != NO_VERTEX:
            if prop != NO_VERTEX or acc != NO_VERTEX:
                return (NO_VERTEX, NO_VERTEX, partner)
            return None
        phase = (ctx.plan_superstep - 1) % 3
        if phase == 0:  # propose
            cand = NO_VERTEX
            for u, val in ctx.neighbors():
                if val[2] == NO_VERTEX:
                    cand = u
                    break  # neighbors arrive in ascending id order
            return (cand, acc, partner)
        if phase == 1:  # accept
            best = NO_VERTEX
            for u, val in ctx.neighbors():
                if val[2] == NO_VERTEX and val[0] == ctx.id:
                    best = u  # ascending order: first proposer is smallest
                    break
            return (prop, best, partner)
        # confirm: pair (p -> a) matches iff p.prop==a, a.acc==p, p.acc in {-1, a}
        if prop != NO_VERTEX:
            a_val = ctx.value_of(prop)
            if a_val[2] == NO_VERTEX and a_val[1] == ctx.id and acc in (NO_VERTEX, prop):
                return (prop, acc, prop)
        if acc != NO_VERTEX:
            p_val = ctx.value_of(acc)
            if (
                p_val[2] == NO_VERTEX
                and p_val[0] == ctx.id
                and p_val[1] in (NO_VERTEX, ctx.id)
            ):
                return (prop, acc, acc)
        return None

    return AlgorithmSpec(
        name="mm",
        schema=schema,
        plans=(
            Plan(ne=init, mode=FIXED, n_itr=1, kind="init", label="unmatched"),
            Plan(ne=step, mode=UNTIL_QUIESCENT, access_mode="all", label="handshake"),
        ),
        params={"seed": seed},
        requires_symmetric=True,
        id_attrs=frozenset({1, 2, 3}),
    )


def tc() -> AlgorithmSpec:
    """Triangle counting over (degree, id)-oriented neighbor lists.

    Phase one ships every vertex's list of strictly higher-(deg, id)
    neighbors to wherever it has a guest copy; phase two counts, at the
    lowest corner of each triangle, the adjacent pairs among its higher
    neighbors by probing those lists. Each triangle is counted exactly
    once; the global count is the sum over vertices.
    """
    schema = make_schema([("tri", "int64")])

    def higher(ctx):
        me = (ctx.degree("all"), ctx.id)
        return tuple(
            u for u in ctx.neighbor_ids() if (ctx.degree_of(u, "all"), u) > me
        )

    def count(ctx):
        mine = ctx.aux_of(ctx.id)
        if len(mine) < 2:
            return (0,)
        order = sorted(mine, key=lambda u: (ctx.degree_of(u, "all"), u))
        total = 0
        for i, a in enumerate(order):
            a_set = set(ctx.aux_of(a))
            for b in order[i + 1 :]:
                if b in a_set:
                    total += 1
        return (total,)

    return AlgorithmSpec(
        name="tc",
        schema=schema,
        plans=(
            Plan(gather=higher, mode=FIXED, n_itr=1, kind="gather", label="orient"),
            Plan(ne=count, mode=FIXED, n_itr=1, access_mode="all", label="count"),
        ),
        requires_symmetric=True,
        aggregate="sum",
    )


REGISTRY = {
    "bfs": bfs,
    "cc": cc,
    "pr": pagerank,
    "ppr": ppr,
    "core": kcore,
    "color": coloring,
    "mis": mis,
    "mm": mm,
    "tc": tc,
}


def build(name: str, **params) -> AlgorithmSpec:
    """Instantiate a registered algorithm by CLI name."""
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ParameterError(
            f"unknown algorithm {name!r}; expected one of {sorted(REGISTRY)}"
        ) from None
    return factory(**params)
