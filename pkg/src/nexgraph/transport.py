"""Worker-to-worker messaging with exact communication-cost accounting.

The in-process transport is the only object shared between workers. Data
messages carry host-to-guest attribute updates; their wire encoding is
fixed-width so byte counts are exact and stable across runs:

    vertex id   u64
    entry count u8
    entries     (position u8, value 8 bytes) each

int64 values are signed little-endian, float64 IEEE-754 little-endian,
bools 8 bytes wide (0/1) for width uniformity. A neighbor-list payload
(used by gather phases) encodes as id u64, count u32, then u64 per id.

Per-receiver mailboxes are double-buffered by superstep: sends go into the
next-superstep buffer and become readable only after the barrier. Within a
(sender, receiver) pair FIFO order is preserved; receivers merge senders in
ascending sender order. ``ShufflingTransport`` randomizes the cross-sender
merge to prove engines cannot depend on it.

Control traffic (barrier reports/releases) is metered separately in
``bytes_control`` and excluded from the worker-data metric.
"""

from __future__ import annotations

import random
import struct
import threading
from dataclasses import dataclass

from .errors import BarrierTimeoutError, RoutingError, StateError

KIND_SYNC = 0
KIND_LIST = 1

# Spec'd control record: kind u8 + superstep u32 + n_change u64 + flags u8.
CONTROL_BYTES = 14


@dataclass(frozen=True)
class SyncMessage:
    """Critical-attribute update for one vertex's guest copy."""

    target_worker: int
    vertex: int
    payload: tuple  # ((position, kind, value), ...) positions ascending


@dataclass(frozen=True)
class ListMessage:
    """One-shot neighbor-id list for a vertex's guest copy (gather phases)."""

    target_worker: int
    vertex: int
    ids: tuple


@dataclass
class ControlMessage:
    """Per-worker barrier report."""

    superstep: int
    n_change_local: int
    activated_any: bool
    active_local: int = 0
    mode_used: str = "all"


@dataclass(frozen=True)
class BarrierResult:
    """Global aggregates; identical on every worker of one superstep."""

    superstep: int
    n_change_total: int
    any_active: bool


@dataclass
class CommStats:
    """Monotone counters; bytes_data is the reported communication metric."""

    bytes_data: int = 0
    bytes_control: int = 0
    messages: int = 0

    def copy(self) -> "CommStats":
        return CommStats(self.bytes_data, self.bytes_control, self.messages)


def encode_sync(msg: SyncMessage) -> bytes:
    parts = [struct.pack("<QB", msg.vertex, len(msg.payload))]
    last_pos = 0
    for pos, kind, value in msg.payload:
        if pos <= last_pos:
            raise RoutingError("payload positions must be strictly ascending")
        last_pos = pos
        if kind == "float64":
            parts.append(struct.pack("<Bd", pos, value))
        else:  # int64 / bool share the signed 8-byte slot
            parts.append(struct.pack("<Bq", pos, int(value)))
    return b"".join(parts)


def decode_sync(data: bytes, kinds) -> tuple[int, list[tuple[int, object]]]:
    """Decode to (vertex, [(position, value), ...]); kinds indexed 1-based."""
    vertex, count = struct.unpack_from("<QB", data, 0)
    off = 9
    entries = []
    for _ in range(count):
        pos = data[off]
        kind = kinds[pos - 1]
        if kind == "float64":
            (value,) = struct.unpack_from("<d", data, off + 1)
        else:
            (value,) = struct.unpack_from("<q", data, off + 1)
            if kind == "bool":
                value = bool(value)
        entries.append((pos, value))
        off += 9
    return vertex, entries


def encode_list(msg: ListMessage) -> bytes:
    return struct.pack("<QI", msg.vertex, len(msg.ids)) + struct.pack(
        f"<{len(msg.ids)}Q", *msg.ids
    )


def decode_list(data: bytes) -> tuple[int, tuple[int, ...]]:
    vertex, count = struct.unpack_from("<QI", data, 0)
    ids = struct.unpack_from(f"<{count}Q", data, 12)
    return vertex, ids


@dataclass
class _Delivery:
    kind: int
    data: bytes


class InProcessTransport:
    """Shared mailbox fabric plus a counted superstep barrier for k workers."""

    def __init__(self, k: int, barrier_timeout: float = 60.0):
        self.k = k
        self.barrier_timeout = barrier_timeout
        # _pending[receiver][sender] -> deliveries for the NEXT superstep.
        self._pending = [[[] for _ in range(k)] for _ in range(k)]
        self._inbox: list[list[_Delivery]] = [[] for _ in range(k)]
        self._data_bytes = [0] * k  # per sender, summed on read
        self._messages = [0] * k
        self._control_bytes = 0
        self._reports: list[ControlMessage | None] = [None] * k
        self._result: BarrierResult | None = None
        self._on_barrier = None  # callable(reports) -> None, runs single-threaded
        self._barrier = threading.Barrier(k, action=self._barrier_action)

    # -- sending -----------------------------------------------------------

    def _check_worker(self, w: int):
        if not 0 <= w < self.k:
            raise RoutingError(f"unknown worker {w} (k={self.k})")

    def send_sync(self, sender: int, msg: SyncMessage) -> None:
        self._check_worker(sender)
        self._check_worker(msg.target_worker)
        data = encode_sync(msg)
        self._pending[msg.target_worker][sender].append(_Delivery(KIND_SYNC, data))
        if msg.target_worker != sender:
            self._data_bytes[sender] += len(data)
            self._messages[sender] += 1

    def send_list(self, sender: int, msg: ListMessage) -> None:
        self._check_worker(sender)
        self._check_worker(msg.target_worker)
        data = encode_list(msg)
        self._pending[msg.target_worker][sender].append(_Delivery(KIND_LIST, data))
        if msg.target_worker != sender:
            self._data_bytes[sender] += len(data)
            self._messages[sender] += 1

    # -- barrier -----------------------------------------------------------

    def _merge_order(self, receiver: int) -> list[int]:
        return list(range(self.k))

    def _barrier_action(self):
        reports = self._reports
        self._result = BarrierResult(
            superstep=reports[0].superstep,
            n_change_total=sum(r.n_change_local for r in reports),
            any_active=any(r.activated_any for r in reports),
        )
        for receiver in range(self.k):
            inbox = []
            for sender in self._merge_order(receiver):
                inbox.extend(self._pending[receiver][sender])
                self._pending[receiver][sender] = []
            self._inbox[receiver] = inbox
        # One report up + one release down per worker.
        self._control_bytes += 2 * CONTROL_BYTES * self.k
        if self._on_barrier is not None:
            self._on_barrier(list(reports))

    def barrier(self, worker_id: int, report: ControlMessage) -> BarrierResult:
        """Block until all k workers report; returns identical aggregates."""
        self._check_worker(worker_id)
        self._reports[worker_id] = report
        try:
            self._barrier.wait(timeout=self.barrier_timeout)
        except threading.BrokenBarrierError:
            raise BarrierTimeoutError(
                f"worker {worker_id} gave up waiting at superstep "
                f"{report.superstep} (timeout {self.barrier_timeout}s)"
            ) from None
        result = self._result
        if result.superstep != report.superstep:
            raise StateError(
                f"barrier superstep mismatch: {result.superstep} vs {report.superstep}"
            )
        return result

    def abort(self) -> None:
        """Break the barrier so blocked workers unwind (error paths)."""
        self._barrier.abort()

    def read_inbox(self, worker_id: int) -> list[_Delivery]:
        self._check_worker(worker_id)
        msgs = self._inbox[worker_id]
        self._inbox[worker_id] = []
        return msgs

    def set_barrier_hook(self, hook) -> None:
        """Install a callable(reports) executed inside each barrier action."""
        self._on_barrier = hook

    # -- accounting ----------------------------------------------------------

    def comm_stats(self) -> CommStats:
        return CommStats(
            bytes_data=sum(self._data_bytes),
            bytes_control=self._control_bytes,
            messages=sum(self._messages),
        )


class ShufflingTransport(InProcessTransport):
    """Test transport: shuffles cross-sender merge order with a seeded RNG.

    Per-sender FIFO order is preserved; engines must produce identical
    results under any cross-sender interleaving.
    """

    def __init__(self, k: int, seed: int, barrier_timeout: float = 60.0):
        super().__init__(k, barrier_timeout)
        self._rng = random.Random(seed)

    def _merge_order(self, receiver: int) -> list[int]:
        order = list(range(self.k))
        self._rng.shuffle(order)
        return order
