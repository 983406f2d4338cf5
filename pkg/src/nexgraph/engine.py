"""BSP execution of neighborhood-expression programs.

A program is a sequence of plans. Each plan runs supersteps over its
active host vertices: evaluate the user's expression against the previous
superstep's neighbor values, publish writes, push changed critical
attributes to remote guest copies, then rendezvous at a global barrier
that aggregates the change count and drives activation for the next
superstep.

Core semantics:

* Shadow writes — expressions evaluated in superstep i only ever observe
  values from superstep i-1, regardless of intra-worker order. Writes are
  buffered during the compute phase and published afterwards.
* Change test — a vertex counts as changed only if a *critical* attribute
  differs bit-exactly from its previous value. Unchanged vertices are not
  synchronized and do not activate anyone.
* Self-adaptive activation — while the global change count stays below
  theta, only the inverse-indexed readers of changed vertices (plus the
  changed vertices themselves) are activated; at or above theta every
  host is activated wholesale, skipping the index scans.
* Determinism — iteration is in ascending vertex id, per-vertex randomness
  is keyed on (seed, vertex, superstep), and message application order is
  owner-unique, so results are independent of worker count and scheduling.
"""

from __future__ import annotations

import hashlib
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BarrierTimeoutError, ConfigError, ExpressionError, ParameterError
from .model import AttributeSchema, value_equal
from .partition import Partition, build_all
from .storage import IndexStore
from .transport import (
    KIND_SYNC,
    BarrierResult,
    ControlMessage,
    InProcessTransport,
    ListMessage,
    SyncMessage,
    decode_list,
    decode_sync,
)

UNTIL_QUIESCENT = "until_quiescent"
FIXED = "fixed"


@dataclass(frozen=True)
class Plan:
    """One iteration stage of a program.

    ``critical`` lists the attribute positions that are synchronized and
    change-tested; None means all attributes (init plans always use all, so
    guests start fully consistent). ``gather`` plans ship a one-shot
    neighbor-id list to guest copies instead of evaluating an expression.
    """

    ne: object = None  # callable(ctx) -> tuple | None (None = abstain)
    mode: str = UNTIL_QUIESCENT
    n_itr: int = 1
    critical: frozenset = None
    access_mode: str = "all"  # default mode for ctx.neighbors()
    kind: str = "iter"  # "init" | "iter" | "gather"
    gather: object = None  # callable(ctx) -> iterable of vertex ids
    label: str = ""

    def critical_positions(self, schema: AttributeSchema) -> tuple[int, ...]:
        if not self.critical:
            return tuple(range(1, len(schema) + 1))
        return tuple(sorted(self.critical))


@dataclass(frozen=True)
class AlgorithmSpec:
    """A named program: schema, plan sequence, parameters."""

    name: str
    schema: AttributeSchema
    plans: tuple
    params: dict = field(default_factory=dict, hash=False, compare=False)
    requires_symmetric: bool = False
    id_attrs: frozenset = frozenset()  # positions whose values are vertex ids
    aggregate: str | None = None  # "sum" of attr 1 reported in summaries


@dataclass
class EngineConfig:
    k: int = 1
    theta: int | None = None  # None -> n // 50
    activation_policy: str = "auto"  # auto | neighbor | all
    sync_policy: str = "critical"  # critical | full
    store_mode: str = "memory"
    seed: int = 0
    max_supersteps: int | None = None
    barrier_timeout: float = 60.0
    check_guests: bool = False
    audit: bool = False
    store_dir: str | None = None

    def resolve_theta(self, n: int) -> int:
        return self.theta if self.theta is not None else n // 50


@dataclass
class SuperstepStats:
    plan: int
    plan_kind: str
    superstep: int  # global, 1-based across the whole program
    superstep_in_plan: int
    n_change: int
    active_count: int
    activation_mode: str  # mode that built this superstep's active set
    bytes_data_delta: int
    wall_time_s: float


@dataclass
class RunResult:
    values: dict  # internal vertex id -> final host value tuple
    stats: list
    comm: object  # CommStats snapshot at completion
    wall_time_s: float
    plan_supersteps: list
    consistency_checks: int = 0
    consistency_violations: list = field(default_factory=list)
    access_logs: list | None = None
    store_report: list | None = None
    _plan_kinds: list = field(default_factory=list)

    @property
    def supersteps(self) -> int:
        return sum(self.plan_supersteps)

    def main_supersteps(self) -> int:
        """Supersteps of the last non-init plan (the algorithm's main loop)."""
        for count, kind in reversed(self._plan_kinds):
            if kind == "iter":
                return count
        return 0


def _u64_hash(*parts) -> int:
    text = ":".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "little")


class NeighborhoodContext:
    """The only window an expression gets onto the graph.

    Exposes the vertex's own value, ids and degrees of the vertex and its
    direct neighbors, the neighbor values, gathered auxiliary lists, and a
    per-(seed, vertex, superstep) random stream. Everything resolves
    locally; the expression cannot reach past the neighborhood.
    """

    def __init__(self, worker):
        self._w = worker
        self._slot = -1
        self.id = -1
        self.superstep = 0
        self.plan_superstep = 0
        self._mode = "all"
        self._draws = 0
        self._nbr_ok = None
        self.n_vertices = worker.meta.n
        self.n_edges = worker.meta.m
        self.seed = worker.config.seed

    def _bind(self, slot: int, gid: int, mode: str):
        self._slot = slot
        self.id = gid
        self._mode = mode
        self._draws = 0
        self._nbr_ok = None

    @property
    def value(self) -> tuple:
        return self._w.values[self._slot]

    def degree(self, mode: str = "all") -> int:
        return self._w.degree_of_slot(self._slot, mode)

    def degree_of(self, vid: int, mode: str = "all") -> int:
        return self._w.degree_of_slot(self._w.part.slot_of[vid], mode)

    def neighbor_slots(self, mode: str | None = None) -> list[int]:
        return self._w.store.read_neighbors(self.id, mode or self._mode)

    def neighbors(self, mode: str | None = None):
        """Yield (neighbor id, neighbor value) in ascending id order."""
        w = self._w
        ids = w.part.local_ids
        vals = w.values
        for slot in self.neighbor_slots(mode):
            yield ids[slot], vals[slot]

    def neighbor_ids(self, mode: str | None = None) -> list[int]:
        ids = self._w.part.local_ids
        return [ids[s] for s in self.neighbor_slots(mode)]

    def value_of(self, vid: int) -> tuple:
        """Value of a direct neighbor (or self) by id."""
        if self._nbr_ok is None:
            self._nbr_ok = set(self.neighbor_ids("all"))
            self._nbr_ok.add(self.id)
        if vid not in self._nbr_ok:
            raise ExpressionError(
                self.id, self.superstep, ValueError(f"{vid} is not a neighbor")
            )
        return self._w.values[self._w.part.slot_of[vid]]

    def aux_of(self, vid: int) -> tuple:
        """Gathered list of a direct neighbor (or self)."""
        return self._w.aux[self._w.part.slot_of[vid]]

    def random(self) -> float:
        """Uniform [0,1) from the (seed, vertex, superstep) stream."""
        h = _u64_hash(self.seed, self.id, self.superstep, self._draws)
        self._draws += 1
        return h / 2.0**64


class Worker:
    """One logical worker: owns a partition, its store, and its values."""

    def __init__(self, part: Partition, store: IndexStore, transport, config, schema, meta):
        self.part = part
        self.store = store
        self.transport = transport
        self.config = config
        self.schema = schema
        self.meta = meta
        self.worker_id = part.worker_id
        default = schema.defaults()
        self.values: list[tuple] = [default] * part.n_local()
        self.aux: list[tuple] = [()] * part.n_local()
        self.active: set[int] = set()
        self.ctx = NeighborhoodContext(self)
        self._kinds = schema.kinds

    def degree_of_slot(self, slot: int, mode: str) -> int:
        if mode == "in":
            return self.part.deg_in[slot]
        if mode == "out":
            return self.part.deg_out[slot]
        return self.part.deg_all[slot]

    def host_values(self) -> dict:
        ids = self.part.local_ids
        return {ids[s]: self.values[s] for s in self.part.host_slots}

    # -- phases ------------------------------------------------------------

    def begin_plan(self, plan: Plan):
        self.active = set(self.part.host_slots)

    def compute_phase(self, plan: Plan, superstep: int, plan_superstep: int) -> list[int]:
        """Evaluate the plan over the active set; returns changed host slots."""
        ctx = self.ctx
        ctx.superstep = superstep
        ctx.plan_superstep = plan_superstep
        if plan.kind == "gather":
            return self._gather_phase(plan)
        pending = []
        for slot in sorted(self.active):
            ctx._bind(slot, self.part.local_ids[slot], plan.access_mode)
            try:
                result = plan.ne(ctx)
            except ExpressionError:
                raise
            except Exception as e:
                raise ExpressionError(self.part.local_ids[slot], superstep, e) from e
            if result is not None:
                pending.append((slot, tuple(result)))
        changed = []
        positions = plan.critical_positions(self.schema)
        for slot, new in pending:
            if not value_equal(self.schema, self.values[slot], new, positions):
                changed.append(slot)
            self.values[slot] = new
        return changed

    def _gather_phase(self, plan: Plan) -> list[int]:
        ctx = self.ctx
        changed = []
        for slot in sorted(self.active):
            ctx._bind(slot, self.part.local_ids[slot], plan.access_mode)
            aux = tuple(plan.gather(ctx))
            if aux != self.aux[slot]:
                changed.append(slot)
                self.aux[slot] = aux
        return changed

    def sync_phase(self, plan: Plan, changed: list[int]) -> None:
        """Ship changed hosts' payloads to every worker holding their guest."""
        directory = self.part.guest_directory
        ids = self.part.local_ids
        if plan.kind == "gather":
            for slot in changed:
                gid = ids[slot]
                for tw in directory.get(gid, ()):
                    self.transport.send_list(self.worker_id, ListMessage(tw, gid, self.aux[slot]))
            return
        if self.config.sync_policy == "full":
            positions = tuple(range(1, len(self.schema) + 1))
        else:
            positions = plan.critical_positions(self.schema)
        kinds = self._kinds
        for slot in changed:
            gid = ids[slot]
            targets = directory.get(gid)
            if not targets:
                continue
            value = self.values[slot]
            payload = tuple((p, kinds[p - 1], value[p - 1]) for p in positions)
            for tw in targets:
                self.transport.send_sync(self.worker_id, SyncMessage(tw, gid, payload))

    def apply_inbox(self) -> list[int]:
        """Apply delivered guest updates; returns updated guest slots."""
        updated = []
        slot_of = self.part.slot_of
        for d in self.transport.read_inbox(self.worker_id):
            if d.kind == KIND_SYNC:
                vertex, entries = decode_sync(d.data, self._kinds)
                slot = slot_of[vertex]
                vals = list(self.values[slot])
                for pos, value in entries:
                    vals[pos - 1] = value
                self.values[slot] = tuple(vals)
            else:
                vertex, ids = decode_list(d.data)
                slot = slot_of[vertex]
                self.aux[slot] = tuple(ids)
            updated.append(slot)
        return updated

    def activation_phase(
        self, changed: list[int], updated_guests: list[int], mode: str, n_change_total: int
    ) -> None:
        if n_change_total == 0:
            self.active = set()
            return
        if mode == "all":
            self.active = set(self.part.host_slots)
            return
        ids = self.part.local_ids
        nxt = set(changed)
        for slot in changed:
            nxt.update(self.store.read_inverse(ids[slot]))
        for slot in updated_guests:
            nxt.update(self.store.read_inverse(ids[slot]))
        self.active = nxt


class Engine:
    """Drives k in-process workers through a program's plans."""

    def __init__(self, meta, partitions, stores, transport, config: EngineConfig, schema):
        self.meta = meta
        self.config = config
        self.transport = transport
        self.schema = schema
        self.workers = [
            Worker(p, s, transport, config, schema, meta)
            for p, s in zip(partitions, stores)
        ]
        self.stats: list[SuperstepStats] = []
        self.consistency_checks = 0
        self.consistency_violations: list = []
        self._theta = config.resolve_theta(meta.n)
        self._current_plan = 0
        self._current_plan_kind = "iter"
        self._plan_base = 0
        self._last_comm = transport.comm_stats()
        self._last_t = time.perf_counter()
        self._current_critical: tuple = ()
        self._check_barrier = None
        if config.check_guests:
            self._check_barrier = threading.Barrier(
                config.k, action=self._consistency_action
            )
        transport.set_barrier_hook(self._stats_hook)

    # -- activation-mode policy --------------------------------------------

    def choose_mode(self, n_change_total: int) -> str:
        """Activation mode for the next superstep, given this one's changes."""
        if n_change_total == 0:
            return "neighbor"  # nothing to activate; index union is empty
        policy = self.config.activation_policy
        if policy == "neighbor":
            return "neighbor"
        if policy == "all":
            return "all"
        return "all" if n_change_total >= self._theta else "neighbor"

    # -- instrumentation hooks ----------------------------------------------

    def _stats_hook(self, reports):
        comm = self.transport.comm_stats()
        now = time.perf_counter()
        r0 = reports[0]
        self.stats.append(
            SuperstepStats(
                plan=self._current_plan,
                plan_kind=self._current_plan_kind,
                superstep=r0.superstep,
                superstep_in_plan=r0.superstep - self._plan_base,
                n_change=sum(r.n_change_local for r in reports),
                active_count=sum(r.active_local for r in reports),
                activation_mode=r0.mode_used,
                bytes_data_delta=comm.bytes_data - self._last_comm.bytes_data,
                wall_time_s=now - self._last_t,
            )
        )
        self._last_comm = comm
        self._last_t = now

    def _consistency_action(self):
        """Compare every guest's critical slots against its host (all parked)."""
        superstep = self.stats[-1].superstep if self.stats else 0
        positions = self._current_critical
        for w in self.workers:
            part = w.part
            for slot, gid in enumerate(part.local_ids):
                if part.is_host[slot]:
                    continue
                owner = part.guest_owner[gid]
                hw = self.workers[owner]
                host_val = hw.values[hw.part.slot_of[gid]]
                guest_val = w.values[slot]
                self.consistency_checks += 1
                if not value_equal(self.schema, host_val, guest_val, positions):
                    self.consistency_violations.append(
                        (superstep, gid, w.worker_id, guest_val, host_val)
                    )

    # -- plan execution -------------------------------------------------------

    def _plan_loop(self, worker: Worker, plan: Plan, base: int) -> int:
        worker.begin_plan(plan)
        mode_used = "all"  # plan start activates every host
        s = 0
        while True:
            s += 1
            gs = base + s
            if self.config.max_supersteps is not None and gs > self.config.max_supersteps:
                raise ConfigError(
                    f"superstep guard exceeded ({self.config.max_supersteps})"
                )
            worker.store.note_superstep(gs)
            changed = worker.compute_phase(plan, gs, s)
            worker.sync_phase(plan, changed)
            report = ControlMessage(
                superstep=gs,
                n_change_local=len(changed),
                activated_any=bool(changed),
                active_local=len(worker.active),
                mode_used=mode_used,
            )
            result: BarrierResult = self.transport.barrier(worker.worker_id, report)
            updated_guests = worker.apply_inbox()
            if self._check_barrier is not None:
                self._check_barrier.wait()
            if plan.mode == UNTIL_QUIESCENT and result.n_change_total == 0:
                return s
            if plan.mode == FIXED and s >= plan.n_itr:
                return s
            mode_used = self.choose_mode(result.n_change_total)
            worker.activation_phase(changed, updated_guests, mode_used, result.n_change_total)

    def _run_plan(self, plan: Plan, plan_idx: int, base: int) -> int:
        self._current_plan = plan_idx
        self._current_plan_kind = plan.kind
        self._plan_base = base
        self._current_critical = plan.critical_positions(self.schema)
        outcome: list = [None] * len(self.workers)
        errors: list = [None] * len(self.workers)

        def run_one(i: int):
            try:
                outcome[i] = self._plan_loop(self.workers[i], plan, base)
            except BaseException as e:  # propagate to driver, unwind peers
                errors[i] = e
                self.transport.abort()
                if self._check_barrier is not None:
                    self._check_barrier.abort()

        if len(self.workers) == 1:
            run_one(0)
        else:
            threads = [
                threading.Thread(target=run_one, args=(i,), name=f"worker-{i}")
                for i in range(len(self.workers))
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        root = [e for e in errors if e is not None and not isinstance(e, BarrierTimeoutError)]
        if root:
            raise root[0]
        timeouts = [e for e in errors if e is not None]
        if timeouts:
            raise timeouts[0]
        return outcome[0]

    def run(self, spec: AlgorithmSpec) -> RunResult:
        if spec.requires_symmetric and self.meta.directed:
            raise ParameterError(
                f"{spec.name} needs an undirected (symmetrized) graph; "
                "re-ingest with undirected=True"
            )
        if len(self.schema) > 255:
            raise ConfigError("schemas are limited to 255 attributes")
        for store in (w.store for w in self.workers):
            store.audit = self.config.audit and store.mode == "disk"
            store.mark_started()
        t0 = time.perf_counter()
        self._last_t = t0
        self._last_comm = self.transport.comm_stats()
        plan_counts = []
        if self.meta.n > 0:
            for plan_idx, plan in enumerate(spec.plans):
                plan_counts.append(self._run_plan(plan, plan_idx, sum(plan_counts)))
        wall = time.perf_counter() - t0
        values: dict[int, tuple] = {}
        for w in self.workers:
            values.update(w.host_values())
        result = RunResult(
            values=values,
            stats=list(self.stats),
            comm=self.transport.comm_stats().copy(),
            wall_time_s=wall,
            plan_supersteps=plan_counts,
            consistency_checks=self.consistency_checks,
            consistency_violations=list(self.consistency_violations),
        )
        result._plan_kinds = [
            (c, p.kind) for c, p in zip(plan_counts, spec.plans)
        ]
        access_logs = [w.store.access_log for w in self.workers]
        if any(access_logs):
            result.access_logs = access_logs
        result.store_report = [
            {
                "mode": w.store.mode,
                "resident_bytes": w.store.resident_index_bytes(),
                "offset_bytes": len(w.part.local_ids) * 16,
                "max_record_bytes": w.store.max_record_bytes(),
            }
            for w in self.workers
        ]
        return result


def run_algorithm(
    graph,
    spec: AlgorithmSpec,
    config: EngineConfig | None = None,
    transport_factory=None,
) -> RunResult:
    """Partition, index, store and execute a program on an ingested graph."""
    config = config or EngineConfig()
    if config.k < 1:
        raise ConfigError(f"worker count must be >= 1, got {config.k}")
    source = spec.params.get("source")
    if source is not None and not (0 <= source < graph.meta.n):
        raise ParameterError(f"source vertex {source} not in graph (n={graph.meta.n})")
    parts, indexes = build_all(graph, config.k)

    tmp = None
    stores = []
    try:
        if config.store_mode == "disk":
            store_dir = config.store_dir
            if store_dir is None:
                tmp = tempfile.TemporaryDirectory(prefix="nexgraph-idx-")
                store_dir = tmp.name
            for part, idx in zip(parts, indexes):
                prefix = Path(store_dir) / f"worker{part.worker_id}"
                store = IndexStore.build(part, idx)
                store.save(part, idx, prefix)
                store.set_mode("disk")
                stores.append(store)
        else:
            stores = [IndexStore.build(p, i) for p, i in zip(parts, indexes)]

        if transport_factory is None:
            transport = InProcessTransport(config.k, config.barrier_timeout)
        else:
            transport = transport_factory(config.k)
        engine = Engine(graph.meta, parts, stores, transport, config, spec.schema)
        return engine.run(spec)
    finally:
        for store in stores:
            store.close()
        if tmp is not None:
            tmp.cleanup()
