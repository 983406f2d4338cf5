"""Semi-caching index storage.

Vertex values always live in memory; the dual neighbor index can be served
either from memory or from a per-worker binary segment file that is only
ever read one record at a time (seek, then a single contiguous read). The
resident footprint in disk mode is the offset table plus one reusable read
buffer — records are never cached.

Segment file layout (little-endian):

    magic  "G3SI"            4 bytes
    version u32              currently 1
    records, sorted by global vertex id:
        id        u64
        host flag u8
        n_in      u32        (counts of the three entry sections)
        n_out     u32
        n_inv     u32
        in slots  u32 * n_in
        out slots u32 * n_out
        inv slots u32 * n_inv

Sidecar offset table: (id u64, offset u64) pairs, sorted by id. The record
index doubles as the local slot number, so the global-id/slot mapping is
recoverable from the sidecar alone.
"""

from __future__ import annotations

import struct
from array import array
from bisect import bisect_left
from dataclasses import dataclass

from .errors import StateError, StorageError

MAGIC = b"G3SI"
VERSION = 1
_HEADER = struct.Struct("<4sI")
_RECORD_HEAD = struct.Struct("<QBIII")

SEGMENT_SUFFIX = ".seg"
OFFSETS_SUFFIX = ".off"


@dataclass
class ReadRecord:
    """One audited disk access: which vertex, where, how many bytes."""

    superstep: int
    vertex: int
    offset: int
    nbytes: int


def write_segments(part, idx, path_prefix) -> tuple[str, str]:
    """Serialize a partition's dual index; returns (segment, sidecar) paths.

    Round-trips exactly: reading the files reproduces the index lists.
    """
    seg_path = str(path_prefix) + SEGMENT_SUFFIX
    off_path = str(path_prefix) + OFFSETS_SUFFIX
    try:
        with open(seg_path, "wb") as seg, open(off_path, "wb") as off:
            seg.write(_HEADER.pack(MAGIC, VERSION))
            pos = _HEADER.size
            for slot, gid in enumerate(part.local_ids):
                ins = idx.in_lists[slot]
                outs = idx.out_lists[slot]
                invs = idx.inv_lists[slot]
                rec = _RECORD_HEAD.pack(
                    gid, 1 if part.is_host[slot] else 0, len(ins), len(outs), len(invs)
                )
                body = array("I", ins + outs + invs).tobytes()
                seg.write(rec)
                seg.write(body)
                off.write(struct.pack("<QQ", gid, pos))
                pos += len(rec) + len(body)
    except OSError as e:
        raise StorageError(f"cannot write index segments at {path_prefix}: {e}") from e
    return seg_path, off_path


class IndexStore:
    """Mode-switchable view over one worker's dual neighbor index.

    Construct with ``IndexStore.build`` (from in-memory structures) or
    ``IndexStore.open`` (from segment files). ``set_mode`` must be called
    before the engine starts; switching afterwards is a state error.
    """

    def __init__(self):
        self.mode = "memory"
        self.audit = False
        self.access_log: list[ReadRecord] = []
        self._superstep = 0
        self._started = False
        self._ids: array | None = None  # sorted global ids
        self._offsets: array | None = None
        self._is_host: list[bool] | None = None
        self._in: list[list[int]] | None = None
        self._out: list[list[int]] | None = None
        self._inv: list[list[int]] | None = None
        self._all: list[list[int]] | None = None
        self._seg_path: str | None = None
        self._fh = None
        self._buf = bytearray()
        self._file_size = 0

    # -- construction ----------------------------------------------------

    @classmethod
    def build(cls, part, idx) -> "IndexStore":
        store = cls()
        store._ids = array("q", part.local_ids)
        store._is_host = list(part.is_host)
        store._in = [list(l) for l in idx.in_lists]
        store._out = [list(l) for l in idx.out_lists]
        store._inv = [list(l) for l in idx.inv_lists]
        store._build_all_lists()
        return store

    @classmethod
    def open(cls, path_prefix) -> "IndexStore":
        """Open previously written segments directly in disk mode."""
        store = cls()
        store._attach(str(path_prefix))
        store.mode = "disk"
        return store

    def _build_all_lists(self):
        self._all = [
            _merge_sorted(i, o) for i, o in zip(self._in, self._out)
        ]

    def _attach(self, path_prefix: str):
        seg_path = path_prefix + SEGMENT_SUFFIX
        off_path = path_prefix + OFFSETS_SUFFIX
        try:
            with open(off_path, "rb") as fh:
                raw = fh.read()
            ids = array("q")
            offsets = array("q")
            for (gid, off) in struct.iter_unpack("<QQ", raw):
                ids.append(gid)
                offsets.append(off)
            fh = open(seg_path, "rb")
        except OSError as e:
            raise StorageError(f"cannot open index segments at {path_prefix}: {e}") from e
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            fh.close()
            raise StorageError(f"truncated segment file {seg_path}")
        magic, version = _HEADER.unpack(head)
        if magic != MAGIC:
            fh.close()
            raise StorageError(f"bad magic in {seg_path}: {magic!r}")
        if version != VERSION:
            fh.close()
            raise StorageError(f"unsupported segment version {version}")
        fh.seek(0, 2)
        self._file_size = fh.tell()
        self._ids = ids
        self._offsets = offsets
        self._seg_path = seg_path
        self._fh = fh

    # -- lifecycle ---------------------------------------------------------

    def save(self, part, idx, path_prefix) -> None:
        """Write segments for later disk-mode serving."""
        write_segments(part, idx, path_prefix)
        self._seg_path = str(path_prefix) + SEGMENT_SUFFIX

    def set_mode(self, mode: str) -> None:
        if self._started:
            raise StateError("cannot change store mode after engine start")
        if mode not in ("memory", "disk"):
            raise StateError(f"unknown store mode {mode!r}")
        if mode == self.mode:
            return
        if mode == "disk":
            if self._fh is None:
                if self._seg_path is None:
                    raise StateError("disk mode requires saved segments (call save)")
                self._attach(self._seg_path[: -len(SEGMENT_SUFFIX)])
            # Drop in-memory lists: disk mode holds only offsets + buffer.
            self._in = self._out = self._inv = self._all = self._is_host = None
        else:
            self._load_lists_from_file()
        self.mode = mode

    def mark_started(self) -> None:
        self._started = True

    def note_superstep(self, superstep: int) -> None:
        self._superstep = superstep

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    # -- reads ---------------------------------------------------------------

    def _slot(self, vertex: int) -> int:
        i = bisect_left(self._ids, vertex)
        if i == len(self._ids) or self._ids[i] != vertex:
            raise StorageError(f"vertex {vertex} is not local to this store")
        return i

    def read_neighbors(self, vertex: int, mode: str = "all") -> list[int]:
        """N(v) slots filtered by access mode; v must be a local host."""
        slot = self._slot(vertex)
        if self.mode == "memory":
            if not self._is_host[slot]:
                raise StorageError(f"vertex {vertex} is not a host here")
            if mode == "in":
                return self._in[slot]
            if mode == "out":
                return self._out[slot]
            return self._all[slot]
        host, ins, outs, _ = self._read_record(slot, vertex)
        if not host:
            raise StorageError(f"vertex {vertex} is not a host here")
        if mode == "in":
            return ins
        if mode == "out":
            return outs
        return _merge_sorted(ins, outs)

    def read_inverse(self, vertex: int) -> list[int]:
        """I(v) host slots; v may be a host or a guest."""
        slot = self._slot(vertex)
        if self.mode == "memory":
            return self._inv[slot]
        _, _, _, invs = self._read_record(slot, vertex)
        return invs

    def read_full(self, vertex: int) -> tuple[bool, list[int], list[int], list[int]]:
        """(is_host, in, out, inv) for one local vertex, any mode."""
        slot = self._slot(vertex)
        if self.mode == "memory":
            return (
                self._is_host[slot],
                self._in[slot],
                self._out[slot],
                self._inv[slot],
            )
        return self._read_record(slot, vertex)

    def _read_record(self, slot: int, vertex: int):
        start = self._offsets[slot]
        end = (
            self._offsets[slot + 1]
            if slot + 1 < len(self._offsets)
            else self._file_size
        )
        nbytes = end - start
        if len(self._buf) < nbytes:
            self._buf = bytearray(nbytes)
        view = memoryview(self._buf)[:nbytes]
        self._fh.seek(start)
        got = self._fh.readinto(view)
        if got != nbytes:
            raise StorageError(f"short read at offset {start} in {self._seg_path}")
        if self.audit:
            self.access_log.append(ReadRecord(self._superstep, vertex, start, nbytes))
        gid, host, n_in, n_out, n_inv = _RECORD_HEAD.unpack_from(view, 0)
        if gid != vertex:
            raise StorageError(f"record id {gid} != requested vertex {vertex}")
        ents = array("I")
        ents.frombytes(view[_RECORD_HEAD.size : _RECORD_HEAD.size + 4 * (n_in + n_out + n_inv)])
        ins = list(ents[:n_in])
        outs = list(ents[n_in : n_in + n_out])
        invs = list(ents[n_in + n_out :])
        return bool(host), ins, outs, invs

    def _load_lists_from_file(self):
        self._is_host, self._in, self._out, self._inv = [], [], [], []
        for slot in range(len(self._ids)):
            host, ins, outs, invs = self._read_record(slot, self._ids[slot])
            self._is_host.append(host)
            self._in.append(ins)
            self._out.append(outs)
            self._inv.append(invs)
        self._build_all_lists()

    # -- instrumentation ----------------------------------------------------

    def resident_index_bytes(self) -> int:
        """Bytes of index data held in memory (disk mode: offsets + buffer)."""
        if self.mode == "disk":
            return len(self._ids) * 16 + len(self._buf)
        total = 0
        for lists in (self._in, self._out, self._inv, self._all):
            total += sum(4 * len(l) for l in lists)
        return total + len(self._ids) * 16

    def max_record_bytes(self) -> int:
        """Largest single record in the attached segment file."""
        if self._offsets is None or len(self._offsets) == 0:
            return 0
        spans = [
            (self._offsets[i + 1] if i + 1 < len(self._offsets) else self._file_size)
            - self._offsets[i]
            for i in range(len(self._offsets))
        ]
        return max(spans)


def _merge_sorted(a: list[int], b: list[int]) -> list[int]:
    """Union of two ascending slot lists, ascending, deduplicated."""
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        x, y = a[i], b[j]
        if x < y:
            out.append(x)
            i += 1
        elif y < x:
            out.append(y)
            j += 1
        else:
            out.append(x)
            i += 1
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return out
