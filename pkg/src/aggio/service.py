"""Buffered parallel file input with an asynchronous-callback API.

A file is opened once, then read through sessions. Starting a session
creates an array of buffer readers, one per disjoint chunk of the session
window; every reader immediately spawns a dedicated I/O thread for its
chunk, so prefetch overlaps whatever the application does next. Client
reads are split into fragments along chunk boundaries, served by the
owning readers (from memory once their chunk is in, queued until then),
and reassembled on the requester's executor before the completion
callback fires. All completion is via callbacks addressed to objects, not
executors, so a client can migrate between issuing a read and receiving
its data.

Per-executor services:
  Manager       validates requests, assigns correlation tags, tracks
                outstanding reads
  ReadAssembler collects fragments by tag and writes them into the
                requester's buffer

One Director coordinates file/session lifecycle and aggregates metrics.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass

from .partition import ChunkSpec, SessionExtent, chunk_bounds, owners, round_robin_placement
from .runtime import Actor, ActorArray, CallbackRef, Group, ObjectRef, Runtime, spawn_io_thread

log = logging.getLogger(__name__)


class InputServiceError(Exception):
    """Raised by the synchronous convenience wrappers on error payloads."""


@dataclass(frozen=True)
class FileOptions:
    """num_readers buffer readers serve every session of the file."""

    num_readers: int = 1

    def __post_init__(self) -> None:
        if self.num_readers < 1:
            raise ValueError(f"num_readers must be >= 1, got {self.num_readers}")


@dataclass(frozen=True)
class FileHandle:
    file_id: int
    path: str
    size: int
    options: FileOptions


@dataclass(frozen=True)
class SessionHandle:
    session_id: int
    file_id: int
    extent: SessionExtent


@dataclass(frozen=True)
class ReadTag:
    """Correlation tag for one read request: issuing executor plus a
    per-executor monotone sequence number. Globally unique."""

    executor: int
    sequence: int


@dataclass(frozen=True)
class Fragment:
    """One reader's slice of a request, moved (not copied) to the assembler."""

    tag: ReadTag
    dest_offset: int
    payload: memoryview | bytes

    @property
    def payload_nbytes(self) -> int:
        return self.payload.nbytes if isinstance(self.payload, memoryview) else len(self.payload)


@dataclass(frozen=True)
class OpenResult:
    file: FileHandle | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class SessionResult:
    session: SessionHandle | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ReadResult:
    session_id: int
    offset: int
    length: int
    data: bytearray | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class CloseResult:
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class MetricsSnapshot:
    """Monotone per-session counters: io_time sums chunk read durations,
    permutation_time sums fragment transfer intervals, overhead_time is
    request wall time not explained by I/O wait or permutation."""

    io_time: float = 0.0
    permutation_time: float = 0.0
    overhead_time: float = 0.0
    bytes_served: int = 0
    fragments: int = 0


class _SessionMetrics:
    __slots__ = ("io_time", "permutation_time", "overhead_time", "bytes_served", "fragments")

    def __init__(self):
        self.io_time = 0.0
        self.permutation_time = 0.0
        self.overhead_time = 0.0
        self.bytes_served = 0
        self.fragments = 0

    def snapshot(self) -> MetricsSnapshot:
        return MetricsSnapshot(
            self.io_time,
            self.permutation_time,
            self.overhead_time,
            self.bytes_served,
            self.fragments,
        )


class BufferReader(Actor):
    """Owns one chunk of a session window.

    On begin: spawns the I/O thread for its chunk and reports initiation.
    Requests arriving before the chunk is in memory queue up and are
    answered in arrival order when it is. The chunk buffer is immutable
    once ready; fragments are memoryview slices of it.
    """

    def __init__(self, session_id: int, index: int, chunk: ChunkSpec, backend, director: ObjectRef):
        self._sid = session_id
        self._index = index
        self._chunk = chunk
        self._backend = backend
        self._director = director
        self._status = "pending"
        self._data: bytes | None = None
        self._error: str | None = None
        self._waiting: deque = deque()

    def begin(self, _):
        if self._chunk.size == 0:
            self._data = b""
            self._status = "ready"
            self.send(self._director, "reader_initiated", (self._sid, self._index))
            self.send(self._director, "reader_done", (self._sid, self._index, 0.0, None))
            return
        self._status = "reading"
        self.runtime.io_begin()
        spawn_io_thread(self._io_main)
        self.send(self._director, "reader_initiated", (self._sid, self._index))

    def _io_main(self) -> None:
        t0 = time.monotonic()
        try:
            data = self._backend.read_at(self._chunk.start, self._chunk.size)
            payload = (data, time.monotonic() - t0, None)
        except Exception as exc:
            payload = (None, time.monotonic() - t0, str(exc))
        try:
            self.send(self.ref, "io_complete", payload)
        finally:
            self.runtime.io_end()

    def io_complete(self, payload):
        data, duration, error = payload
        if error is None:
            self._data = data
            self._status = "ready"
        else:
            self._error = error
            self._status = "failed"
            log.warning("chunk %d of session %d failed: %s", self._index, self._sid, error)
        while self._waiting:
            request, arrived = self._waiting.popleft()
            self._answer(request, time.monotonic() - arrived)
        self.send(self._director, "reader_done", (self._sid, self._index, duration, error))

    def serve(self, request):
        """(tag, file_start, file_end, dest_offset, assembler, t_submit)"""
        if self._status in ("pending", "reading"):
            self._waiting.append((request, time.monotonic()))
        else:
            self._answer(request, 0.0)

    def serve_overlap(self, payload):
        """Broadcast-routing variant: (tag, req_offset, req_len, assembler,
        t_submit); the reader intersects the request with its own chunk and
        stays silent if there is no overlap."""
        tag, req_offset, req_len, assembler, t_submit = payload
        lo = max(req_offset, self._chunk.start)
        hi = min(req_offset + req_len, self._chunk.end)
        if hi <= lo:
            return
        self.serve((tag, lo, hi, lo - req_offset, assembler, t_submit))

    def _answer(self, request, io_wait: float) -> None:
        tag, file_start, file_end, dest_offset, assembler, _ = request
        if self._error is not None:
            self.send(assembler, "fragment_failed", (tag, f"chunk {self._index}: {self._error}"))
            return
        rel = file_start - self._chunk.start
        payload = memoryview(self._data)[rel : rel + (file_end - file_start)]
        frag = Fragment(tag, dest_offset, payload)
        self.send(assembler, "accept_fragment", (frag, io_wait, time.monotonic()))


class _Assembly:
    __slots__ = (
        "session_id",
        "offset",
        "expected",
        "received",
        "dest",
        "after_read",
        "t_submit",
        "fragments",
        "permutation",
        "io_wait",
    )

    def __init__(self, session_id, offset, expected, dest, after_read, t_submit):
        self.session_id = session_id
        self.offset = offset
        self.expected = expected
        self.received = 0
        self.dest = dest
        self.after_read = after_read
        self.t_submit = t_submit
        self.fragments = 0
        self.permutation = 0.0
        self.io_wait = 0.0


class ReadAssembler(Actor):
    """Per-executor collector: writes fragments into the requester's buffer
    at their destination offsets and fires the completion callback exactly
    once, when received bytes equal expected bytes (or on first failure)."""

    def __init__(self, executor: int):
        self._executor = executor
        self._assemblies: dict[ReadTag, _Assembly] = {}
        self._manager: "Manager | None" = None
        self._director: ObjectRef | None = None

    def _register(self, tag, session_id, offset, expected, dest, after_read, t_submit):
        self._assemblies[tag] = _Assembly(session_id, offset, expected, dest, after_read, t_submit)

    # stride for writing fragments into the destination: one giant buffer
    # assignment would hold the interpreter lock for milliseconds and starve
    # reader I/O threads of timely wakeups
    _COPY_STRIDE = 256 << 10

    def accept_fragment(self, payload):
        frag, io_wait, t_sent = payload
        state = self._assemblies.get(frag.tag)
        if state is None:
            return  # request already failed; late fragment
        n = frag.payload_nbytes
        src = memoryview(frag.payload)
        dest = state.dest
        base = frag.dest_offset
        for i in range(0, n, self._COPY_STRIDE):
            j = min(i + self._COPY_STRIDE, n)
            dest[base + i : base + j] = src[i:j]
        state.received += n
        state.fragments += 1
        state.permutation += time.monotonic() - t_sent
        state.io_wait = max(state.io_wait, io_wait)
        if state.received >= state.expected:
            self._finish(frag.tag, state, None)

    def fragment_failed(self, payload):
        tag, error = payload
        state = self._assemblies.get(tag)
        if state is not None:
            self._finish(tag, state, error)

    def _finish(self, tag: ReadTag, state: _Assembly, error: str | None) -> None:
        del self._assemblies[tag]
        wall = time.monotonic() - state.t_submit
        result = ReadResult(state.session_id, state.offset, state.expected, state.dest, error)
        self.runtime.deliver(state.after_read, result)
        self.send(
            self._director,
            "request_metrics",
            (state.session_id, state.fragments, state.received, state.permutation, state.io_wait, wall),
        )
        self._manager._read_completed(state.session_id)


class _ManagedSession:
    __slots__ = ("extent", "readers", "file_id")

    def __init__(self, extent: SessionExtent, readers: tuple[ObjectRef, ...], file_id: int):
        self.extent = extent
        self.readers = readers
        self.file_id = file_id


class Manager(Actor):
    """Per-executor front door for reads: validates against the session
    extent, assigns the correlation tag, registers the assembly with the
    local assembler, and dispatches fragment requests to the owning
    readers (or to all readers in broadcast routing)."""

    def __init__(self, executor: int, routing: str):
        self._executor = executor
        self._routing = routing
        self._files: dict[int, FileHandle] = {}
        self._sessions: dict[int, _ManagedSession] = {}
        self._outstanding: dict[int, int] = {}
        self._seq = 0
        self._assembler: ReadAssembler | None = None
        self._director: ObjectRef | None = None

    # -- director-driven table maintenance ------------------------------

    def register_file(self, payload):
        file_id, handle = payload
        self._files[file_id] = handle
        self.send(self._director, "file_registered", (file_id, self._executor))

    def deregister_file(self, payload):
        (file_id,) = payload
        self._files.pop(file_id, None)
        self.send(self._director, "file_deregistered", (file_id, self._executor))

    def register_session(self, payload):
        session_id, extent, readers, file_id = payload
        self._sessions[session_id] = _ManagedSession(extent, readers, file_id)
        self.send(self._director, "session_registered", (session_id, self._executor))

    def prepare_close(self, payload):
        (session_id,) = payload
        count = self._outstanding.get(session_id, 0)
        self.send(self._director, "close_tally", (session_id, self._executor, count))

    def purge_session(self, payload):
        (session_id,) = payload
        self._sessions.pop(session_id, None)
        self._outstanding.pop(session_id, None)

    # -- read path -------------------------------------------------------

    def submit_read(self, payload):
        """Routed entry for reads issued outside any executor context."""
        session, nbytes, offset, dest, after_read = payload
        self._submit(session, nbytes, offset, dest, after_read)

    def _submit(self, session: SessionHandle, nbytes: int, offset: int, dest, after_read: CallbackRef):
        rt = self.runtime
        sid = session.session_id
        state = self._sessions.get(sid)
        error = None
        if state is None:
            error = f"session {sid} is not open"
        elif nbytes < 0 or not state.extent.contains(offset, max(nbytes, 0)):
            error = (
                f"read [{offset}, {offset + nbytes}) outside session extent "
                f"[{state.extent.file_offset}, {state.extent.end})"
            )
        elif nbytes > 0 and (dest is None or len(dest) < nbytes):
            error = f"destination holds {0 if dest is None else len(dest)} bytes, need {nbytes}"
        if error is not None:
            rt.deliver(after_read, ReadResult(sid, offset, nbytes, None, error))
            return
        if nbytes == 0:
            rt.deliver(after_read, ReadResult(sid, offset, 0, dest))
            return
        self._seq += 1
        tag = ReadTag(self._executor, self._seq)
        t_submit = time.monotonic()
        self._assembler._register(tag, sid, offset, nbytes, dest, after_read, t_submit)
        self._outstanding[sid] = self._outstanding.get(sid, 0) + 1
        assembler_ref = self._assembler.ref
        if self._routing == "direct":
            for plan in owners(state.extent, offset, nbytes):
                self.send(
                    state.readers[plan.reader_index],
                    "serve",
                    (tag, plan.file_start, plan.file_end, plan.dest_offset, assembler_ref, t_submit),
                )
        else:
            for reader in state.readers:
                self.send(reader, "serve_overlap", (tag, offset, nbytes, assembler_ref, t_submit))

    def _read_completed(self, session_id: int) -> None:
        if session_id in self._outstanding:
            self._outstanding[session_id] -= 1


class _DirectorFile:
    __slots__ = ("handle", "backend", "opened_cb", "acks", "sessions", "close_cb", "close_acks")

    def __init__(self, handle: FileHandle, backend, opened_cb: CallbackRef):
        self.handle = handle
        self.backend = backend
        self.opened_cb = opened_cb
        self.acks = 0
        self.sessions: set[int] = set()
        self.close_cb: CallbackRef | None = None
        self.close_acks = 0


class _DirectorSession:
    __slots__ = (
        "handle",
        "file_id",
        "readers",
        "manager_acks",
        "reader_acks",
        "ready_cb",
        "phase",
        "close_cb",
        "tally",
    )

    def __init__(self, handle: SessionHandle, file_id: int, readers: ActorArray, ready_cb: CallbackRef):
        self.handle = handle
        self.file_id = file_id
        self.readers = readers
        self.manager_acks = 0
        self.reader_acks = 0
        self.ready_cb = ready_cb
        self.phase = "starting"  # starting -> open -> closing -> closed
        self.close_cb = None
        self.tally: dict[int, int] = {}


class Director(Actor):
    """Singleton coordinator: opens files, starts and tears down sessions,
    and aggregates per-session metrics. Session start is announced to every
    manager; the ready callback fires once all managers know the session
    and all readers have initiated (not completed) their chunk reads."""

    def __init__(self, backend_factory, managers: Group, num_executors: int):
        self._backend_factory = backend_factory
        self._managers = managers
        self._num_executors = num_executors
        self._files: dict[int, _DirectorFile] = {}
        self._sessions: dict[int, _DirectorSession] = {}
        self._metrics: dict[int, _SessionMetrics] = {}
        self._file_seq = 0
        self._session_seq = 0

    # -- open/close files -------------------------------------------------

    def open_file(self, payload):
        path, options, opened_cb = payload
        try:
            backend = self._backend_factory(path)
        except Exception as exc:
            self.runtime.deliver(opened_cb, OpenResult(None, f"cannot open {path}: {exc}"))
            return
        self._file_seq += 1
        handle = FileHandle(self._file_seq, str(path), backend.size(), options)
        self._files[handle.file_id] = _DirectorFile(handle, backend, opened_cb)
        self._managers.broadcast("register_file", (handle.file_id, handle))

    def file_registered(self, payload):
        file_id, _executor = payload
        state = self._files.get(file_id)
        if state is None:
            return
        state.acks += 1
        if state.acks == self._num_executors:
            self.runtime.deliver(state.opened_cb, OpenResult(state.handle))

    def close_file(self, payload):
        file_id, closed_cb = payload
        state = self._files.get(file_id)
        if state is None:
            self.runtime.deliver(closed_cb, CloseResult(f"file {file_id} is not open"))
            return
        live = [s for s in state.sessions if self._sessions[s].phase != "closed"]
        if live:
            self.runtime.deliver(
                closed_cb, CloseResult(f"file {file_id} has open session(s): {sorted(live)}")
            )
            return
        state.close_cb = closed_cb
        self._managers.broadcast("deregister_file", (file_id,))

    def file_deregistered(self, payload):
        file_id, _executor = payload
        state = self._files.get(file_id)
        if state is None or state.close_cb is None:
            return
        state.close_acks += 1
        if state.close_acks == self._num_executors:
            self._files.pop(file_id)
            state.backend.close()
            self.runtime.deliver(state.close_cb, CloseResult())

    # -- session lifecycle -------------------------------------------------

    def begin_session(self, payload):
        file_id, nbytes, offset, ready_cb = payload
        rt = self.runtime
        fstate = self._files.get(file_id)
        if fstate is None:
            rt.deliver(ready_cb, SessionResult(None, f"file {file_id} is not open"))
            return
        size = fstate.handle.size
        if offset < 0 or nbytes < 0 or offset + nbytes > size:
            rt.deliver(
                ready_cb,
                SessionResult(
                    None, f"window [{offset}, {offset + nbytes}) exceeds file of {size} bytes"
                ),
            )
            return
        self._session_seq += 1
        sid = self._session_seq
        extent = SessionExtent(offset, nbytes, fstate.handle.options.num_readers)
        handle = SessionHandle(sid, file_id, extent)
        n = extent.num_readers
        director_ref = self.ref
        backend = fstate.backend
        readers = rt.create_array(
            n,
            lambda i: BufferReader(sid, i, chunk_bounds(extent, i), backend, director_ref),
            round_robin_placement(n, self._num_executors),
        )
        self._sessions[sid] = _DirectorSession(handle, file_id, readers, ready_cb)
        self._metrics[sid] = _SessionMetrics()
        fstate.sessions.add(sid)
        self._managers.broadcast("register_session", (sid, extent, readers.refs, file_id))
        readers.broadcast("begin")

    def session_registered(self, payload):
        sid, _executor = payload
        state = self._sessions.get(sid)
        if state is not None:
            state.manager_acks += 1
            self._maybe_ready(state)

    def reader_initiated(self, payload):
        sid, _index = payload
        state = self._sessions.get(sid)
        if state is not None:
            state.reader_acks += 1
            self._maybe_ready(state)

    def _maybe_ready(self, state: _DirectorSession) -> None:
        if (
            state.phase == "starting"
            and state.manager_acks == self._num_executors
            and state.reader_acks == state.handle.extent.num_readers
        ):
            state.phase = "open"
            self.runtime.deliver(state.ready_cb, SessionResult(state.handle))

    def end_session(self, payload):
        sid, after_end = payload
        rt = self.runtime
        state = self._sessions.get(sid)
        if state is None:
            rt.deliver(after_end, CloseResult(f"session {sid} was never started"))
            return
        if state.phase == "closed":
            rt.deliver(after_end, CloseResult(f"session {sid} is already closed"))
            return
        if state.phase == "closing":
            rt.deliver(after_end, CloseResult(f"session {sid} close already in progress"))
            return
        if state.phase == "starting":
            rt.deliver(after_end, CloseResult(f"session {sid} is still starting"))
            return
        state.phase = "closing"
        state.close_cb = after_end
        state.tally = {}
        self._managers.broadcast("prepare_close", (sid,))

    def close_tally(self, payload):
        sid, executor, outstanding = payload
        state = self._sessions.get(sid)
        if state is None or state.phase != "closing":
            return
        state.tally[executor] = outstanding
        if len(state.tally) < self._num_executors:
            return
        total = sum(state.tally.values())
        if total > 0:
            state.phase = "open"
            self.runtime.deliver(
                state.close_cb, CloseResult(f"session {sid} has {total} outstanding read(s)")
            )
            state.close_cb = None
            return
        for ref in state.readers.refs:
            self.runtime.destroy(ref)
        self._managers.broadcast("purge_session", (sid,))
        state.phase = "closed"
        state.readers = None
        self._files[state.file_id].sessions.discard(sid)
        self.runtime.deliver(state.close_cb, CloseResult())
        state.close_cb = None

    # -- metrics ------------------------------------------------------------

    def reader_done(self, payload):
        sid, _index, duration, _error = payload
        metrics = self._metrics.get(sid)
        if metrics is not None:
            metrics.io_time += duration

    def request_metrics(self, payload):
        sid, fragments, received, permutation, io_wait, wall = payload
        metrics = self._metrics.get(sid)
        if metrics is None:
            return
        metrics.fragments += fragments
        metrics.bytes_served += received
        metrics.permutation_time += permutation
        metrics.overhead_time += max(0.0, wall - io_wait - permutation)

    def metrics_query(self, payload):
        sid, reply_cb = payload
        metrics = self._metrics.get(sid)
        snap = metrics.snapshot() if metrics is not None else MetricsSnapshot()
        self.runtime.deliver(reply_cb, snap)


class InputService:
    """The public five-call API plus synchronous conveniences.

    All five calls complete through the caller-supplied callback; errors
    ride the same callback as an error payload, never as a cross-executor
    exception. read() must be given a destination buffer of at least the
    requested size; the assembler is its only writer until after_read
    fires.
    """

    def __init__(self, runtime: Runtime, backend_factory, routing: str = "direct"):
        if routing not in ("direct", "broadcast"):
            raise ValueError(f"routing must be 'direct' or 'broadcast', got {routing!r}")
        self._runtime = runtime
        self._assemblers = runtime.create_group(lambda e: ReadAssembler(e))
        self._managers = runtime.create_group(lambda e: Manager(e, routing))
        director = Director(backend_factory, self._managers, runtime.config.num_executors)
        self._director_ref = runtime.create_singleton(lambda: director, executor=0)
        for e in range(runtime.config.num_executors):
            manager = self._managers.member(e)
            assembler = self._assemblers.member(e)
            manager._assembler = assembler
            manager._director = self._director_ref
            assembler._manager = manager
            assembler._director = self._director_ref

    @property
    def runtime(self) -> Runtime:
        return self._runtime

    # -- the five calls ----------------------------------------------------

    def open(self, path, opened: CallbackRef, options: FileOptions) -> None:
        self._runtime.send_to(self._director_ref, "open_file", (str(path), options, opened))

    def start_read_session(self, file: FileHandle, nbytes: int, offset: int, ready: CallbackRef) -> None:
        self._runtime.send_to(
            self._director_ref, "begin_session", (file.file_id, int(nbytes), int(offset), ready)
        )

    def read(self, session: SessionHandle, nbytes: int, offset: int, dest, after_read: CallbackRef) -> None:
        executor = self._runtime.current_executor()
        if executor is not None:
            self._managers.member(executor)._submit(session, int(nbytes), int(offset), dest, after_read)
        else:
            self._runtime.send_to(
                self._managers.member_ref(0),
                "submit_read",
                (session, int(nbytes), int(offset), dest, after_read),
            )

    def close_read_session(self, session: SessionHandle, after_end: CallbackRef) -> None:
        self._runtime.send_to(self._director_ref, "end_session", (session.session_id, after_end))

    def close(self, file: FileHandle, closed: CallbackRef) -> None:
        self._runtime.send_to(self._director_ref, "close_file", (file.file_id, closed))

    # -- synchronous conveniences (for threads outside the runtime) ---------

    def _await(self, start, timeout: float):
        box = self._runtime.mailbox()
        try:
            start(box.callback("post"))
            return box.take(timeout)
        finally:
            self._runtime.destroy(box.ref)

    def open_sync(self, path, options: FileOptions, timeout: float = 30.0) -> FileHandle:
        result: OpenResult = self._await(lambda cb: self.open(path, cb, options), timeout)
        if not result.ok:
            raise InputServiceError(result.error)
        return result.file

    def start_session_sync(self, file: FileHandle, nbytes: int, offset: int = 0, timeout: float = 30.0) -> SessionHandle:
        result: SessionResult = self._await(
            lambda cb: self.start_read_session(file, nbytes, offset, cb), timeout
        )
        if not result.ok:
            raise InputServiceError(result.error)
        return result.session

    def read_sync(self, session: SessionHandle, nbytes: int, offset: int, timeout: float = 30.0) -> bytearray:
        dest = bytearray(nbytes)
        result: ReadResult = self._await(
            lambda cb: self.read(session, nbytes, offset, dest, cb), timeout
        )
        if not result.ok:
            raise InputServiceError(result.error)
        return dest

    def close_session_sync(self, session: SessionHandle, timeout: float = 30.0) -> None:
        result: CloseResult = self._await(
            lambda cb: self.close_read_session(session, cb), timeout
        )
        if not result.ok:
            raise InputServiceError(result.error)

    def close_sync(self, file: FileHandle, timeout: float = 30.0) -> None:
        result: CloseResult = self._await(lambda cb: self.close(file, cb), timeout)
        if not result.ok:
            raise InputServiceError(result.error)

    def metrics_snapshot(self, session: SessionHandle, timeout: float = 30.0) -> MetricsSnapshot:
        return self._await(
            lambda cb: self._runtime.send_to(
                self._director_ref, "metrics_query", (session.session_id, cb)
            ),
            timeout,
        )
