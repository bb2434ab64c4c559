"""aggio: two-phase parallel file input for over-decomposed task runtimes.

A configurable layer of buffer readers prefetches disjoint file sections
on dedicated I/O threads and serves overlapping read requests from many
migratable client tasks via asynchronous callbacks, decoupling the
application's task decomposition from the file-system interaction.
"""

from .partition import (
    ChunkSpec,
    FragmentPlan,
    SessionExtent,
    chunk_bounds,
    owners,
    round_robin_placement,
)
from .runtime import (
    Actor,
    ActorArray,
    CallbackRef,
    Group,
    Invocation,
    Mailbox,
    ObjectRef,
    Runtime,
    RuntimeConfig,
    start_runtime,
)
from .service import (
    CloseResult,
    FileHandle,
    FileOptions,
    Fragment,
    InputService,
    InputServiceError,
    MetricsSnapshot,
    OpenResult,
    ReadResult,
    ReadTag,
    SessionHandle,
    SessionResult,
)
from .storage import (
    BackendError,
    OsFileBackend,
    ReadAt,
    SimBackendConfig,
    SimulatedBackend,
    backend_factory,
    predict_makespan,
)

__all__ = [
    "Actor",
    "ActorArray",
    "BackendError",
    "CallbackRef",
    "ChunkSpec",
    "CloseResult",
    "FileHandle",
    "FileOptions",
    "Fragment",
    "FragmentPlan",
    "Group",
    "InputService",
    "InputServiceError",
    "Invocation",
    "Mailbox",
    "MetricsSnapshot",
    "ObjectRef",
    "OpenResult",
    "OsFileBackend",
    "ReadAt",
    "ReadResult",
    "ReadTag",
    "Runtime",
    "RuntimeConfig",
    "SessionExtent",
    "SessionHandle",
    "SessionResult",
    "SimBackendConfig",
    "SimulatedBackend",
    "backend_factory",
    "chunk_bounds",
    "owners",
    "predict_makespan",
    "round_robin_placement",
    "start_runtime",
]
