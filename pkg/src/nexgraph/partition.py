"""Hash partitioning with guest-vertex replication and dual neighbor indexes.

Every vertex is owned by exactly one worker (its *host* copy). Wherever a
host has a neighbor owned elsewhere, a read-only *guest* copy of that
neighbor is materialized locally, so every neighborhood expression can be
evaluated without remote reads. Per worker, two index families are built:

* N(v): for each host v, its neighbor references (in/out sub-lists, both
  resolving to local slots, host or guest),
* I(v): for each local vertex v (hosts and guests alike), the local hosts
  that read v — exactly the vertices to re-activate when v changes.

Local *slots* are ranks in the worker's ascending-id vertex table; slot
order therefore equals global-id order, which keeps every list, file and
byte count deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError


def assign_worker(v: int, k: int) -> int:
    """Deterministic owner of vertex v among k workers (id mod k)."""
    if k < 1:
        raise ConfigError(f"worker count must be >= 1, got {k}")
    return v % k


@dataclass
class Partition:
    """One worker's share of the graph: hosts, guests, degrees, directory."""

    worker_id: int
    k: int
    local_ids: list[int]  # ascending global ids; index == local slot
    is_host: list[bool]
    slot_of: dict[int, int]
    guest_owner: dict[int, int]  # guest global id -> owning worker
    guest_directory: dict[int, tuple[int, ...]]  # host id -> remote workers
    deg_in: list[int]  # per slot, over the full input graph
    deg_out: list[int]
    deg_all: list[int]
    host_slots: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.host_slots:
            self.host_slots = [s for s, h in enumerate(self.is_host) if h]

    @property
    def host_ids(self) -> list[int]:
        return [self.local_ids[s] for s in self.host_slots]

    @property
    def guest_ids(self) -> list[int]:
        return [g for g, h in zip(self.local_ids, self.is_host) if not h]

    def n_local(self) -> int:
        return len(self.local_ids)


@dataclass
class DualNeighborIndex:
    """Per-slot N (hosts only) and I (all local vertices) lists.

    Entries are local slots, ordered by the referenced vertex's global id.
    I entries always point at host slots.
    """

    in_lists: list[list[int]]
    out_lists: list[list[int]]
    inv_lists: list[list[int]]


def _adjacency(n: int, edges) -> tuple[list[list[int]], list[list[int]]]:
    out_adj: list[list[int]] = [[] for _ in range(n)]
    in_adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:  # edges pre-deduplicated and sorted by ingest
        out_adj[a].append(b)
        in_adj[b].append(a)
    for adj in (out_adj, in_adj):
        for lst in adj:
            lst.sort()
    return out_adj, in_adj


def build_partitions(graph, k: int, hash_fn=assign_worker) -> list[Partition]:
    """Split an ingested graph across k workers and materialize guests."""
    if k < 1:
        raise ConfigError(f"worker count must be >= 1, got {k}")
    n = graph.meta.n
    out_adj, in_adj = _adjacency(n, graph.edges)
    owner = [hash_fn(v, k) for v in range(n)]

    nbr_union: list[list[int]] = []
    for v in range(n):
        merged = sorted(set(in_adj[v]) | set(out_adj[v]))
        nbr_union.append(merged)

    # Guests of worker w: remote neighbors of any host on w.
    guests_of: list[set[int]] = [set() for _ in range(k)]
    for v in range(n):
        w = owner[v]
        for u in nbr_union[v]:
            if owner[u] != w:
                guests_of[w].add(u)

    # Directory: for each host, the remote workers that hold its guest copy.
    directory: list[set[int]] = [set() for _ in range(n)]
    for w in range(k):
        for g in guests_of[w]:
            directory[g].add(w)

    partitions = []
    for w in range(k):
        hosts = [v for v in range(n) if owner[v] == w]
        local_ids = sorted(set(hosts) | guests_of[w])
        slot_of = {g: s for s, g in enumerate(local_ids)}
        is_host = [owner[g] == w for g in local_ids]
        partitions.append(
            Partition(
                worker_id=w,
                k=k,
                local_ids=local_ids,
                is_host=is_host,
                slot_of=slot_of,
                guest_owner={g: owner[g] for g in local_ids if owner[g] != w},
                guest_directory={
                    h: tuple(sorted(directory[h])) for h in hosts if directory[h]
                },
                deg_in=[len(in_adj[g]) for g in local_ids],
                deg_out=[len(out_adj[g]) for g in local_ids],
                deg_all=[len(nbr_union[g]) for g in local_ids],
            )
        )
    return partitions


def build_dual_index(part: Partition, graph, _adj=None) -> DualNeighborIndex:
    """Build N and I lists for one partition from the global edge list."""
    out_adj, in_adj = _adj if _adj is not None else _adjacency(graph.meta.n, graph.edges)
    slot_of = part.slot_of
    n_local = part.n_local()

    in_lists: list[list[int]] = [[] for _ in range(n_local)]
    out_lists: list[list[int]] = [[] for _ in range(n_local)]
    inv_lists: list[list[int]] = [[] for _ in range(n_local)]

    for host_slot in part.host_slots:
        v = part.local_ids[host_slot]
        for u in in_adj[v]:
            if u not in slot_of:
                raise ConfigError(
                    f"dangling reference: neighbor {u} of host {v} "
                    f"not local on worker {part.worker_id}"
                )
            in_lists[host_slot].append(slot_of[u])
        for u in out_adj[v]:
            if u not in slot_of:
                raise ConfigError(
                    f"dangling reference: neighbor {u} of host {v} "
                    f"not local on worker {part.worker_id}"
                )
            out_lists[host_slot].append(slot_of[u])
        # I is the exact local transpose of N (either direction).
        for u in sorted(set(in_adj[v]) | set(out_adj[v])):
            inv_lists[slot_of[u]].append(host_slot)

    for lists in (in_lists, out_lists, inv_lists):
        for lst in lists:
            lst.sort()  # slot order == global id order
    return DualNeighborIndex(in_lists, out_lists, inv_lists)


def build_all(graph, k: int) -> tuple[list[Partition], list[DualNeighborIndex]]:
    """Partition the graph and build every worker's dual index."""
    parts = build_partitions(graph, k)
    adj = _adjacency(graph.meta.n, graph.edges)
    return parts, [build_dual_index(p, graph, _adj=adj) for p in parts]
