"""nexgraph: a BSP graph-processing engine programmed by neighborhood expressions.

Vertices are hash-partitioned across in-process workers; remote neighbors
are replicated locally as read-only guest copies, so user code is a single
pure function of a vertex's own value and its neighbors' values. The
engine owns synchronization (changed critical attributes only), activation
(index-driven or wholesale, chosen adaptively), and storage (adjacency
indexes on disk, values in memory).
"""

from .engine import (
    AlgorithmSpec,
    Engine,
    EngineConfig,
    Plan,
    RunResult,
    run_algorithm,
)
from .ingest import from_edges, ingest
from .model import INT_MAX, make_schema, value_equal, value_get
from .partition import assign_worker, build_all, build_dual_index, build_partitions
from .storage import IndexStore, write_segments
from .transport import CommStats, InProcessTransport, ShufflingTransport

__version__ = "0.1.0"

__all__ = [
    "AlgorithmSpec",
    "CommStats",
    "Engine",
    "EngineConfig",
    "INT_MAX",
    "IndexStore",
    "InProcessTransport",
    "Plan",
    "RunResult",
    "ShufflingTransport",
    "assign_worker",
    "build_all",
    "build_dual_index",
    "build_partitions",
    "from_edges",
    "ingest",
    "make_schema",
    "run_algorithm",
    "value_equal",
    "value_get",
    "write_segments",
    "__version__",
]
