"""Independent reference implementations used as ground truth.

Every oracle consumes the raw (external-id) edge list directly and shares
no code with the engine: BFS is a queue traversal, components use
union-find, ranks are dense matrix iteration, coreness is min-degree
peeling, coloring is the sequential greedy pass, triangles are counted by
sorted-adjacency intersection (cross-checked by full triple enumeration on
small graphs). Randomized outputs (MIS, MM) are validated structurally
instead of reproduced.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import ParameterError
from .model import INT_MAX


def _vertices(edges, extra=()):
    vs = set(extra)
    for a, b in edges:
        vs.add(a)
        vs.add(b)
    return sorted(vs)


def _undirected_adj(edges, vertices):
    adj = {v: set() for v in vertices}
    for a, b in edges:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    return adj


def bfs(edges, source, vertices=None) -> dict[int, int]:
    """Hop distances following edge direction; unreachable stay INT_MAX."""
    vertices = vertices or _vertices(edges)
    if source not in set(vertices):
        raise ParameterError(f"source {source} not in graph")
    out_adj = {v: [] for v in vertices}
    for a, b in edges:
        if a != b:
            out_adj[a].append(b)
    dist = {v: INT_MAX for v in vertices}
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u in out_adj[v]:
            if dist[u] == INT_MAX:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def cc(edges, vertices=None) -> dict[int, int]:
    """Component labels (minimum member id) by union-find."""
    vertices = vertices or _vertices(edges)
    parent = {v: v for v in vertices}

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return {v: find(v) for v in vertices}


def _rank_iteration(edges, vertices, damping, n_itr, teleport):
    index = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    out_deg = np.zeros(n)
    flows = []
    for a, b in edges:
        if a != b:
            out_deg[index[a]] += 1
            flows.append((index[a], index[b]))
    # M[dst, src] = 1/outdeg(src); dangling columns stay zero (mass leaks).
    m = np.zeros((n, n))
    for src, dst in flows:
        m[dst, src] = 1.0 / out_deg[src]
    base = np.array(teleport, dtype=float)
    r = base.copy()
    for _ in range(n_itr):
        r = (1.0 - damping) * base + damping * (m @ r)
    return {v: float(r[index[v]]) for v in vertices}


def pagerank(edges, damping=0.85, n_itr=10, vertices=None) -> dict[int, float]:
    vertices = vertices or _vertices(edges)
    uniform = [1.0 / len(vertices)] * len(vertices)
    return _rank_iteration(edges, vertices, damping, n_itr, uniform)


def ppr(edges, source, damping=0.85, n_itr=10, vertices=None) -> dict[int, float]:
    vertices = vertices or _vertices(edges)
    if source not in set(vertices):
        raise ParameterError(f"source {source} not in graph")
    point = [1.0 if v == source else 0.0 for v in vertices]
    return _rank_iteration(edges, vertices, damping, n_itr, point)


def kcore(edges, vertices=None) -> dict[int, int]:
    """Coreness by iterated minimum-degree peeling."""
    vertices = vertices or _vertices(edges)
    adj = _undirected_adj(edges, vertices)
    degree = {v: len(adj[v]) for v in vertices}
    core = {}
    remaining = set(vertices)
    k = 0
    while remaining:
        peel = [v for v in remaining if degree[v] <= k]
        if not peel:
            k += 1
            continue
        stack = list(peel)
        while stack:
            v = stack.pop()
            if v not in remaining:
                continue
            if degree[v] > k:
                continue
            core[v] = k
            remaining.discard(v)
            for u in adj[v]:
                if u in remaining:
                    degree[u] -= 1
                    if degree[u] <= k:
                        stack.append(u)
    return core


def coloring(edges, vertices=None) -> dict[int, int]:
    """Sequential greedy coloring in descending (degree, id) order."""
    vertices = vertices or _vertices(edges)
    adj = _undirected_adj(edges, vertices)
    order = sorted(vertices, key=lambda v: (len(adj[v]), v), reverse=True)
    color = {}
    for v in order:
        used = {color[u] for u in adj[v] if u in color}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    return color


def tc(edges, vertices=None) -> int:
    """Total triangles by sorted-adjacency intersection."""
    vertices = vertices or _vertices(edges)
    adj = _undirected_adj(edges, vertices)
    rank = {v: (len(adj[v]), v) for v in vertices}
    higher = {
        v: sorted((u for u in adj[v] if rank[u] > rank[v])) for v in vertices
    }
    total = 0
    for v in vertices:
        hv = higher[v]
        hv_set = set(hv)
        for u in hv:
            total += sum(1 for w in higher[u] if w in hv_set)
    return total


def tc_bruteforce(edges, vertices=None) -> int:
    """Triple-enumeration cross-check; only sensible for small n."""
    vertices = vertices or _vertices(edges)
    adj = _undirected_adj(edges, vertices)
    vs = sorted(vertices)
    total = 0
    for i, a in enumerate(vs):
        for j in range(i + 1, len(vs)):
            b = vs[j]
            if b not in adj[a]:
                continue
            for k in range(j + 1, len(vs)):
                c = vs[k]
                if c in adj[a] and c in adj[b]:
                    total += 1
    return total


def validate_mis(edges, membership: dict[int, bool], vertices=None) -> tuple[bool, str]:
    """Check independence and maximality of a vertex->bool assignment."""
    vertices = vertices or _vertices(edges)
    adj = _undirected_adj(edges, vertices)
    for v in vertices:
        if v not in membership:
            return False, f"vertex {v} missing from output"
    for a, b in edges:
        if a != b and membership[a] and membership[b]:
            return False, f"adjacent vertices {a},{b} both in the set"
    for v in vertices:
        if not membership[v] and not any(membership[u] for u in adj[v]):
            return False, f"vertex {v} is outside the set with no member neighbor"
    return True, "ok"


def validate_mm(edges, partner: dict[int, int], vertices=None) -> tuple[bool, str]:
    """Check symmetry, degree, adjacency and maximality of a matching."""
    vertices = vertices or _vertices(edges)
    adj = _undirected_adj(edges, vertices)
    for v in vertices:
        p = partner.get(v, -1)
        if p == -1:
            continue
        if p == v:
            return False, f"vertex {v} matched to itself"
        if p not in adj[v]:
            return False, f"pair ({v},{p}) is not an edge"
        if partner.get(p, -1) != v:
            return False, f"partner relation not symmetric at ({v},{p})"
    for a, b in edges:
        if a != b and partner.get(a, -1) == -1 and partner.get(b, -1) == -1:
            return False, f"edge ({a},{b}) joins two unmatched vertices"
    return True, "ok"


ORACLES = {
    "bfs": bfs,
    "cc": cc,
    "pr": pagerank,
    "ppr": ppr,
    "core": kcore,
    "color": coloring,
    "tc": tc,
    "validate_mis": validate_mis,
    "validate_mm": validate_mm,
}


def oracle_run(name: str, edges, **params):
    """Dispatch a reference computation by name."""
    try:
        fn = ORACLES[name]
    except KeyError:
        raise ParameterError(
            f"no oracle named {name!r}; expected one of {sorted(ORACLES)}"
        ) from None
    return fn(edges, **params)
