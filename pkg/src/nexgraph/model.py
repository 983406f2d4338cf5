"""Core vertex-value model: attribute schemas, typed slots, change tests.

Vertex values are plain tuples, one slot per schema attribute. Attribute
positions are 1-based throughout the public API. Change detection on float
slots is bit-exact (IEEE-754 representation compare), never tolerance-based,
because activation and synchronization are driven by "did the value change".
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import SchemaError

# Sentinel for "unreachable / undefined" in distance-style attributes.
# Stored in an int64 slot, so sentinel+1 cannot overflow.
INT_MAX = 2**31 - 1

KINDS = ("int64", "float64", "bool")

_DEFAULTS = {"int64": 0, "float64": 0.0, "bool": False}


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered, named, typed attribute layout of a vertex value."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    _pos: dict = field(repr=False, hash=False, compare=False, default_factory=dict)

    def __post_init__(self):
        for i, (name, kind) in enumerate(zip(self.names, self.kinds)):
            self._pos[name] = i + 1
            if kind not in KINDS:
                raise SchemaError(f"unknown attribute kind {kind!r}")

    def __len__(self) -> int:
        return len(self.names)

    def position(self, name: str) -> int:
        """1-based position of a named attribute."""
        try:
            return self._pos[name]
        except KeyError:
            raise SchemaError(f"no attribute named {name!r}") from None

    def kind_at(self, pos: int) -> str:
        if not 1 <= pos <= len(self.names):
            raise SchemaError(f"position {pos} out of range 1..{len(self.names)}")
        return self.kinds[pos - 1]

    def defaults(self) -> tuple:
        """Initial value every vertex (host and guest) starts from."""
        return tuple(_DEFAULTS[k] for k in self.kinds)

    def all_positions(self) -> frozenset[int]:
        return frozenset(range(1, len(self.names) + 1))


def make_schema(specs) -> AttributeSchema:
    """Build a schema from (name, kind) pairs.

    Rejects empty specs, duplicate names and unknown kinds.
    """
    specs = list(specs)
    if not specs:
        raise SchemaError("schema needs at least one attribute")
    names = [n for n, _ in specs]
    if len(set(names)) != len(names):
        raise SchemaError(f"duplicate attribute names in {names}")
    return AttributeSchema(tuple(names), tuple(k for _, k in specs))


def make_value(schema: AttributeSchema, values) -> tuple:
    """Validate a value tuple against a schema and return it."""
    values = tuple(values)
    if len(values) != len(schema):
        raise SchemaError(
            f"value has {len(values)} slots, schema has {len(schema)}"
        )
    for i, (v, kind) in enumerate(zip(values, schema.kinds)):
        ok = (
            (kind == "int64" and isinstance(v, int) and not isinstance(v, bool))
            or (kind == "float64" and isinstance(v, float))
            or (kind == "bool" and isinstance(v, bool))
        )
        if not ok:
            raise SchemaError(
                f"slot {i + 1} expects {kind}, got {type(v).__name__}"
            )
    return values


def value_get(value: tuple, pos: int):
    """Read the slot at a 1-based position."""
    if not 1 <= pos <= len(value):
        raise SchemaError(f"position {pos} out of range 1..{len(value)}")
    return value[pos - 1]


def _slot_equal(kind: str, a, b) -> bool:
    if kind == "float64":
        # Bit-exact: distinguishes 0.0 from -0.0, treats identical NaNs equal.
        return struct.pack("<d", a) == struct.pack("<d", b)
    return a == b


def value_equal(schema: AttributeSchema, a: tuple, b: tuple, positions=None) -> bool:
    """True iff a and b agree on every listed position (all when None/empty).

    Float slots compare bit-exactly.
    """
    if len(a) != len(schema) or len(b) != len(schema):
        raise SchemaError("value/schema length mismatch")
    if not positions:
        positions = range(1, len(schema) + 1)
    for pos in positions:
        if not _slot_equal(schema.kind_at(pos), a[pos - 1], b[pos - 1]):
            return False
    return True


@dataclass
class GraphMeta:
    """Shape of the ingested graph: counts and directedness."""

    n: int
    m: int  # directed edge records after normalization
    directed: bool
