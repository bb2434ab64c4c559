"""Benchmark harness: deterministic test files, the naive baseline, and the
microbenchmarks for decomposition independence, computation overlap,
migration locality, disk-vs-network cost, and the block-cyclic pipeline.

Every benchmark verifies the pattern rule on all bytes it reads and emits
performance rows only for verified runs. Rows go to CSV with one row per
repetition; summaries print mean and min makespan per configuration.
"""

from __future__ import annotations

import csv
import statistics
import threading
import time
from dataclasses import dataclass, fields
from pathlib import Path

from .partition import SessionExtent, chunk_bounds, round_robin_placement
from .pattern import first_mismatch, generate_pattern_file
from .runtime import Actor, Runtime, RuntimeConfig, spawn_io_thread, start_runtime
from .service import FileOptions, InputService, ReadResult
from .storage import OsFileBackend, ReadAt, SimBackendConfig, SimulatedBackend, backend_factory

MODES = ("naive", "buffered", "overlap", "migration", "io-vs-net", "pipeline")

MIB = 1 << 20


class VerificationError(Exception):
    """A benchmark read produced bytes violating the pattern rule."""


@dataclass(frozen=True)
class PatternFileSpec:
    path: str
    size: int


def gen_file(spec: PatternFileSpec) -> Path:
    return generate_pattern_file(spec.path, spec.size)


@dataclass
class BenchConfig:
    mode: str
    file_path: str = ""
    file_size: int = 16 * MIB
    executors: int = 4
    executors_per_node: int | None = None  # None: one emulated node
    inter_node_latency: float = 0.0  # seconds
    inter_node_bandwidth: float | None = None  # bytes/second, cross-node payloads
    clients: int = 4
    readers: int = 4
    backend: str = "sim"  # "os" | "sim"
    stripes: int = 4
    stripe_width: int = 1 * MIB
    overhead: float = 1e-3  # seconds per stripe piece
    bandwidth: float = 100e6  # bytes/second per stripe stream
    repetitions: int = 1
    csv_path: str | None = None
    routing: str = "direct"
    bg_duration: float | None = None  # overlap: fixed background load, seconds per executor
    segments: int = 8  # pipeline
    block_size: int = 1 * MIB  # pipeline
    compute_factor: float = 2.0  # pipeline: compute time per block / read time
    transfer_size: int | None = None  # io-vs-net: bytes to read and ship

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.clients < 1:
            raise ValueError("clients must be >= 1")
        if self.readers < 1:
            raise ValueError("readers must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.backend not in ("os", "sim"):
            raise ValueError(f"backend must be 'os' or 'sim', got {self.backend!r}")

    def runtime_config(self) -> RuntimeConfig:
        per_node = self.executors_per_node or self.executors
        return RuntimeConfig(
            num_executors=self.executors,
            executors_per_node=per_node,
            inter_node_latency=self.inter_node_latency,
            inter_node_bandwidth=self.inter_node_bandwidth,
        )

    def sim_config(self) -> SimBackendConfig:
        return SimBackendConfig(
            stripes=self.stripes,
            stripe_width=self.stripe_width,
            per_request_overhead=self.overhead,
            stream_bandwidth=self.bandwidth,
            backing=self.file_path,
        )

    def make_backend(self):
        if self.backend == "sim":
            return SimulatedBackend(self.sim_config())
        return OsFileBackend(self.file_path)

    def service_factory(self):
        return backend_factory(self.backend, self.sim_config() if self.backend == "sim" else None)


@dataclass
class BenchRecord:
    mode: str
    clients: object = ""
    readers: object = ""
    repetition: object = ""
    makespan: object = ""
    throughput: object = ""
    background_fraction: object = ""
    io_time: object = ""
    permutation_time: object = ""
    overhead_time: object = ""
    pre_migration_read_time: object = ""
    post_migration_read_time: object = ""


CSV_FIELDS = tuple(f.name for f in fields(BenchRecord))


def write_csv(path: str | Path, records: list[BenchRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for rec in records:
            writer.writerow([getattr(rec, name) for name in CSV_FIELDS])


def summarize(records: list[BenchRecord]) -> str:
    spans = [r.makespan for r in records if isinstance(r.makespan, float)]
    if not spans:
        return "no timed rows"
    return (
        f"{len(spans)} run(s): makespan mean {statistics.mean(spans):.4f}s "
        f"min {min(spans):.4f}s"
    )


def _check(results) -> None:
    bad = [r for r in results if r[-1] is not None]
    if bad:
        raise VerificationError(f"{len(bad)} read(s) violated the pattern rule: {bad[:3]}")


def client_slices(file_size: int, clients: int) -> list[tuple[int, int]]:
    """Equal disjoint slices, remainder to the lowest-indexed clients."""
    extent = SessionExtent(0, file_size, clients)
    return [
        (chunk.start, chunk.size)
        for chunk in (chunk_bounds(extent, i) for i in range(clients))
    ]


# ---------------------------------------------------------------------------
# naive baseline: every client hits the backend directly


class _DirectReadClient(Actor):
    """Reads its slice straight from the backend, either on a dedicated I/O
    thread (default) or inline on its executor (the blocking comparator).
    Hands the bytes back for post-window verification."""

    def __init__(self, index: int, backend, offset: int, length: int, done, blocking: bool):
        self._index = index
        self._backend = backend
        self._offset = offset
        self._length = length
        self._done = done
        self._blocking = blocking

    def go(self, _):
        if self._blocking:
            self.runtime.deliver(self._done, self._read())
            return
        self.runtime.io_begin()
        spawn_io_thread(self._io)

    def _io(self):
        try:
            result = self._read()
        finally:
            self.runtime.io_end()
        self.runtime.deliver(self._done, result)

    def _read(self):
        t_issue = time.monotonic()
        try:
            data = self._backend.read_at(self._offset, self._length)
            error = None
        except Exception as exc:
            data = None
            error = str(exc)
        t_done = time.monotonic()
        return (self._index, self._offset, self._length, t_issue, t_done, error, data)


def _run_naive_rep(rt: Runtime, backend, cfg: BenchConfig, blocking: bool):
    box = rt.mailbox()
    slices = client_slices(cfg.file_size, cfg.clients)
    clients = rt.create_array(
        cfg.clients,
        lambda i: _DirectReadClient(i, backend, *slices[i], box.callback("post"), blocking),
        round_robin_placement(cfg.clients, cfg.executors),
    )
    clients.broadcast("go")
    results = box.take_many(cfg.clients, timeout=600.0)
    rt.await_quiescence(timeout=60.0)
    _verify_delivered(results)
    issues = [r[3] for r in results]
    dones = [r[4] for r in results]
    makespan = max(dones) - min(issues)
    requests = [ReadAt(r[1], r[2], r[3]) for r in results]
    for ref in clients.refs:
        rt.destroy(ref)
    rt.destroy(box.ref)
    return makespan, requests


def bench_naive(cfg: BenchConfig, details: list | None = None) -> list[BenchRecord]:
    cfg.validate()
    records = []
    with start_runtime(cfg.runtime_config()) as rt:
        backend = cfg.make_backend()
        try:
            for rep in range(cfg.repetitions):
                makespan, requests = _run_naive_rep(rt, backend, cfg, blocking=False)
                if details is not None:
                    details.append(requests)
                records.append(
                    BenchRecord(
                        mode=cfg.mode,
                        clients=cfg.clients,
                        readers="",
                        repetition=rep,
                        makespan=makespan,
                        throughput=cfg.file_size / makespan if makespan > 0 else 0.0,
                    )
                )
        finally:
            backend.close()
    return records


# ---------------------------------------------------------------------------
# buffered mode: clients read through the input service


class _ServiceReadClient(Actor):
    """Issues one read for its slice through the input service and hands the
    filled buffer back; the caller verifies outside the measured window
    (a multi-MiB pattern check would perturb the timing it is checking).
    The destination is preallocated for the same reason."""

    def __init__(self, svc: InputService, index: int, offset: int, length: int, done):
        self._svc = svc
        self._index = index
        self._offset = offset
        self._length = length
        self._done = done
        self._t_issue = 0.0
        self._dest = bytearray(length)

    def go(self, session):
        self._t_issue = time.monotonic()
        self._svc.read(session, self._length, self._offset, self._dest, self.callback("got"))

    def got(self, result: ReadResult):
        t_done = time.monotonic()
        self.runtime.deliver(
            self._done,
            (self._index, self._offset, self._length, self._t_issue, t_done, result.error, self._dest),
        )


def _verify_delivered(results) -> None:
    """Pattern-check buffers handed back by service read clients."""
    for _index, offset, _length, _t0, _t1, error, dest in results:
        if error is not None:
            raise VerificationError(f"read at {offset} failed: {error}")
        bad = first_mismatch(dest, offset)
        if bad is not None:
            raise VerificationError(f"read at {offset} violates the pattern at +{bad}")


def _run_buffered_rep(rt: Runtime, svc: InputService, file, cfg: BenchConfig):
    box = rt.mailbox()
    slices = client_slices(cfg.file_size, cfg.clients)
    clients = rt.create_array(
        cfg.clients,
        lambda i: _ServiceReadClient(svc, i, *slices[i], box.callback("post")),
        round_robin_placement(cfg.clients, cfg.executors),
    )
    window_start = time.monotonic()
    session = svc.start_session_sync(file, cfg.file_size, 0)
    clients.broadcast("go", session)
    results = box.take_many(cfg.clients, timeout=600.0)
    makespan = max(r[4] for r in results) - window_start
    rt.await_quiescence(timeout=60.0)
    _verify_delivered(results)
    metrics = svc.metrics_snapshot(session)
    svc.close_session_sync(session)
    for ref in clients.refs:
        rt.destroy(ref)
    rt.destroy(box.ref)
    return makespan, metrics


def bench_buffered(cfg: BenchConfig) -> list[BenchRecord]:
    cfg.validate()
    records = []
    with start_runtime(cfg.runtime_config()) as rt:
        svc = InputService(rt, cfg.service_factory(), routing=cfg.routing)
        file = svc.open_sync(cfg.file_path, FileOptions(cfg.readers))
        for rep in range(cfg.repetitions):
            makespan, metrics = _run_buffered_rep(rt, svc, file, cfg)
            records.append(
                BenchRecord(
                    mode=cfg.mode,
                    clients=cfg.clients,
                    readers=cfg.readers,
                    repetition=rep,
                    makespan=makespan,
                    throughput=cfg.file_size / makespan if makespan > 0 else 0.0,
                    io_time=metrics.io_time,
                    permutation_time=metrics.permutation_time,
                    overhead_time=metrics.overhead_time,
                )
            )
        svc.close_sync(file)
    return records


# ---------------------------------------------------------------------------
# overlap: background work quanta racing file input


def _spin(iterations: int) -> None:
    for _ in range(iterations):
        pass


def calibrate_spin(target_seconds: float = 10e-6) -> int:
    """Busy-loop iteration count lasting roughly target_seconds."""
    probe = 200_000
    t0 = time.perf_counter()
    _spin(probe)
    rate = probe / max(time.perf_counter() - t0, 1e-9)
    return max(1, int(rate * target_seconds))


class _BackgroundWorker(Actor):
    """Runs one ~10 us work quantum per invocation, then yields by
    re-enqueueing itself, so the executor can interleave other tasks.
    Stops when told to, or when its fixed-duration loop deadline passes."""

    def __init__(self, spin: int, stop: threading.Event, duration: float | None, done):
        self._spin = spin
        self._stop = stop
        self._duration = duration
        self._deadline: float | None = None
        self._done = done
        self._count = 0
        self._wall = 0.0
        self._finished = False

    def tick(self, _):
        if self._finished:
            return
        t0 = time.monotonic()
        if self._deadline is None and self._duration is not None:
            self._deadline = t0 + self._duration
        _spin(self._spin)
        t1 = time.monotonic()
        self._wall += t1 - t0
        self._count += 1
        if self._stop.is_set() or (self._deadline is not None and t1 >= self._deadline):
            self._finished = True
            self.runtime.deliver(self._done, (self._count, self._wall, t1))
            return
        self.send(self.ref, "tick")


def _start_background(rt: Runtime, spin: int, stop, duration, box):
    group = rt.create_group(
        lambda e: _BackgroundWorker(spin, stop, duration, box.callback("post"))
    )
    group.broadcast("tick")
    return group


def _wall_of(walls: dict[str, float], cls: type) -> float:
    return walls.get(cls.__name__, 0.0)


def _background_share(rt: Runtime, before: dict[str, float], after: dict[str, float]) -> float:
    """Share of executor task time that went to background quanta between
    the two snapshots. A ratio of sibling measurements, so it stays stable
    even when OS/interpreter scheduling makes absolute rates noisy."""
    bg = _wall_of(after, _BackgroundWorker) - _wall_of(before, _BackgroundWorker)
    total = sum(after.values()) - sum(before.values())
    return bg / total if total > 0 else 0.0


def bench_overlap(cfg: BenchConfig) -> list[BenchRecord]:
    """Three sub-experiments per configuration:

    overlap          clients read through the service while background
                     workers run until the reads finish; reports the share
                     of executor task time spent in background quanta
                     during the read window
    overlap-baseline blocking direct reads on the executors, no background
    overlap-naive    the same blocking reads plus a fixed-duration
                     background load sized to the baseline read time; the
                     background share collapses and the total runtime is
                     read time plus background time, serialized
    """
    cfg.validate()
    records = []
    with start_runtime(cfg.runtime_config()) as rt:
        spin = calibrate_spin()
        svc = InputService(rt, cfg.service_factory(), routing=cfg.routing)
        file = svc.open_sync(cfg.file_path, FileOptions(cfg.readers))
        backend = cfg.make_backend()
        try:
            for rep in range(cfg.repetitions):
                # service input with background running until the reads complete
                stop = threading.Event()
                bg_box = rt.mailbox()
                _start_background(rt, spin, stop, None, bg_box)
                done_box = rt.mailbox()
                slices = client_slices(cfg.file_size, cfg.clients)
                clients = rt.create_array(
                    cfg.clients,
                    lambda i: _ServiceReadClient(svc, i, *slices[i], done_box.callback("post")),
                    round_robin_placement(cfg.clients, cfg.executors),
                )
                walls_before = rt.task_wall_by_class(periods=True)
                t0 = time.monotonic()
                session = svc.start_session_sync(file, cfg.file_size, 0)
                clients.broadcast("go", session)
                results = done_box.take_many(cfg.clients, timeout=600.0)
                read_window = time.monotonic() - t0
                walls_after = rt.task_wall_by_class(periods=True)
                stop.set()
                bg_box.take_many(cfg.executors, timeout=30.0)
                rt.await_quiescence(timeout=60.0)
                _verify_delivered(results)
                svc.close_session_sync(session)
                fraction = _background_share(rt, walls_before, walls_after)
                records.append(
                    BenchRecord(
                        mode="overlap",
                        clients=cfg.clients,
                        readers=cfg.readers,
                        repetition=rep,
                        makespan=read_window,
                        throughput=cfg.file_size / read_window,
                        background_fraction=fraction,
                    )
                )
                for ref in clients.refs:
                    rt.destroy(ref)
                rt.destroy(done_box.ref)
                rt.destroy(bg_box.ref)

                # blocking baseline without background
                base_span, _ = _run_naive_rep(rt, backend, cfg, blocking=True)
                records.append(
                    BenchRecord(
                        mode="overlap-baseline",
                        clients=cfg.clients,
                        repetition=rep,
                        makespan=base_span,
                        throughput=cfg.file_size / base_span,
                        background_fraction=0.0,
                    )
                )

                # blocking reads plus a fixed-duration background load; done
                # messages collect on each client's own executor so the
                # window closes without a cross-executor relay pile-up
                duration = cfg.bg_duration if cfg.bg_duration is not None else base_span
                stop = threading.Event()
                bg_box = rt.mailbox()
                placement = round_robin_placement(cfg.clients, cfg.executors)
                done_boxes = [rt.mailbox(executor=e) for e in range(cfg.executors)]
                clients = rt.create_array(
                    cfg.clients,
                    lambda i: _DirectReadClient(
                        i, backend, *slices[i], done_boxes[placement[i]].callback("post"), True
                    ),
                    placement,
                )
                per_box = [placement.count(e) for e in range(cfg.executors)]
                walls_before = rt.task_wall_by_class(periods=True)
                t0 = time.monotonic()
                clients.broadcast("go")
                _start_background(rt, spin, stop, duration, bg_box)
                results = []
                for box, expect in zip(done_boxes, per_box):
                    results.extend(box.take_many(expect, timeout=600.0))
                t_reads = time.monotonic()
                walls_after = rt.task_wall_by_class(periods=True)
                reports = bg_box.take_many(cfg.executors, timeout=600.0)
                t_total = max(t_reads, max(r[2] for r in reports)) - t0
                rt.await_quiescence(timeout=60.0)
                _verify_delivered(results)
                fraction = _background_share(rt, walls_before, walls_after)
                records.append(
                    BenchRecord(
                        mode="overlap-naive",
                        clients=cfg.clients,
                        repetition=rep,
                        makespan=t_total,
                        throughput=cfg.file_size / t_total,
                        background_fraction=fraction,
                    )
                )
                for ref in clients.refs:
                    rt.destroy(ref)
                for box in done_boxes:
                    rt.destroy(box.ref)
                rt.destroy(bg_box.ref)
        finally:
            backend.close()
        svc.close_sync(file)
    return records


# ---------------------------------------------------------------------------
# migration: cross-node reads, migrate the clients to the data, read again


class _MigratingClient(Actor):
    """Issues one read per request message and reports timing; survives
    being migrated between the two phases."""

    def __init__(self, svc: InputService, done):
        self._svc = svc
        self._done = done
        self._t_issue = 0.0
        self._dest: bytearray | None = None
        self._offset = 0

    def do_read(self, payload):
        session, offset, length = payload
        self._offset = offset
        self._dest = bytearray(length)
        self._t_issue = time.monotonic()
        self._svc.read(session, length, offset, self._dest, self.callback("got"))

    def got(self, result: ReadResult):
        t_done = time.monotonic()
        if result.error is not None:
            mismatch = result.error
        else:
            mismatch = first_mismatch(self._dest, self._offset)
        self.runtime.deliver(self._done, (self._t_issue, t_done, mismatch))


def bench_migration(cfg: BenchConfig) -> list[BenchRecord]:
    """Two clients and two readers on two single-executor nodes. Phase one
    reads the chunk living on the other node; the clients then swap nodes
    and repeat the identical reads locally."""
    cfg.validate()
    if cfg.executors != 2 or (cfg.executors_per_node or cfg.executors) != 1:
        raise ValueError("migration mode wants --executors 2 --nodes 2")
    read_size = cfg.file_size // 2
    if read_size == 0:
        raise ValueError("migration mode needs a file of at least 2 bytes")
    records = []
    with start_runtime(cfg.runtime_config()) as rt:
        svc = InputService(rt, cfg.service_factory(), routing=cfg.routing)
        file = svc.open_sync(cfg.file_path, FileOptions(2))
        for rep in range(cfg.repetitions):
            session = svc.start_session_sync(file, cfg.file_size, 0)
            rt.await_quiescence(timeout=120.0)  # let the prefetch finish
            box = rt.mailbox()
            clients = rt.create_array(
                2, lambda i: _MigratingClient(svc, box.callback("post")), [0, 1]
            )
            # phase 1: each client wants the chunk held on the other node
            rt.send_to(clients.element(0), "do_read", (session, read_size, read_size))
            rt.send_to(clients.element(1), "do_read", (session, 0, read_size))
            phase1 = box.take_many(2, timeout=120.0)
            _check(phase1)
            pre = max(t1 - t0 for t0, t1, _ in phase1)
            # swap the clients onto the data's nodes
            mig_box = rt.mailbox()
            rt.migrate(clients.element(0), 1, mig_box.callback("post"))
            rt.migrate(clients.element(1), 0, mig_box.callback("post"))
            mig_box.take_many(2, timeout=30.0)
            rt.send_to(clients.element(0), "do_read", (session, read_size, read_size))
            rt.send_to(clients.element(1), "do_read", (session, 0, read_size))
            phase2 = box.take_many(2, timeout=120.0)
            _check(phase2)
            post = max(t1 - t0 for t0, t1, _ in phase2)
            rt.await_quiescence(timeout=60.0)
            svc.close_session_sync(session)
            records.append(
                BenchRecord(
                    mode=cfg.mode,
                    clients=2,
                    readers=2,
                    repetition=rep,
                    makespan=pre + post,
                    pre_migration_read_time=pre,
                    post_migration_read_time=post,
                )
            )
            for ref in clients.refs:
                rt.destroy(ref)
            rt.destroy(box.ref)
            rt.destroy(mig_box.ref)
        svc.close_sync(file)
    return records


# ---------------------------------------------------------------------------
# io-vs-net: one backend read vs one cross-node transfer of the same bytes


class _Receiver(Actor):
    def receive(self, payload):
        data, t_sent, done = payload
        self.runtime.deliver(done, (time.monotonic() - t_sent, len(data)))


class _Sender(Actor):
    def go(self, payload):
        peer, data, done = payload
        self.send(peer, "receive", (data, time.monotonic(), done))


def bench_io_vs_net(cfg: BenchConfig) -> list[BenchRecord]:
    cfg.validate()
    size = cfg.transfer_size if cfg.transfer_size is not None else cfg.file_size
    if size > cfg.file_size:
        raise ValueError("transfer size exceeds the file")
    records = []
    with start_runtime(cfg.runtime_config()) as rt:
        backend = cfg.make_backend()
        try:
            for rep in range(cfg.repetitions):
                t0 = time.monotonic()
                data = backend.read_at(0, size)
                io_time = time.monotonic() - t0
                mismatch = first_mismatch(data, 0)
                if mismatch is not None:
                    raise VerificationError(f"backend read mismatch at {mismatch}")
                box = rt.mailbox()
                sender = rt.create_array(1, lambda i: _Sender(), [0])
                receiver = rt.create_array(1, lambda i: _Receiver(), [rt.config.num_executors - 1])
                rt.send_to(sender.element(0), "go", (receiver.element(0), data, box.callback("post")))
                net_time, nbytes = box.take(timeout=120.0)
                rt.await_quiescence(timeout=30.0)
                if nbytes != size:
                    raise VerificationError(f"transfer carried {nbytes} bytes, wanted {size}")
                ratio = io_time / net_time if net_time > 0 else 0.0
                records.append(
                    BenchRecord(
                        mode=cfg.mode,
                        clients=1,
                        repetition=rep,
                        makespan=io_time,
                        throughput=ratio,
                        io_time=io_time,
                        permutation_time=net_time,
                    )
                )
                rt.destroy(sender.element(0))
                rt.destroy(receiver.element(0))
                rt.destroy(box.ref)
        finally:
            backend.close()
    return records


# ---------------------------------------------------------------------------
# pipeline: block-cyclic consumption with one session per segment


class _PipelineWorker(Actor):
    """Consumes blocks j with j = index mod workers, one per segment. On
    each block arrival it first issues the read for its next block, then
    computes on the current one, so the next read proceeds underneath."""

    def __init__(self, svc, index, workers, block, segments, compute_seconds, report):
        self._svc = svc
        self._index = index
        self._workers = workers
        self._block = block
        self._segments = segments
        self._compute = compute_seconds
        self._report = report
        self._sessions: dict[int, object] = {}
        self._want_issue: int | None = None
        self._idle_since = 0.0
        self._dest: dict[int, bytearray] = {}

    def session_ready(self, payload):
        segment, session = payload
        self._sessions[segment] = session
        if segment == 0 and self._want_issue is None:
            self._idle_since = time.monotonic()
            self._issue(0)
        elif self._want_issue == segment:
            self._want_issue = None
            self._issue(segment)

    def _issue(self, segment: int) -> None:
        session = self._sessions[segment]
        offset = segment * self._workers * self._block + self._index * self._block
        dest = bytearray(self._block)
        self._dest[segment] = dest
        self._svc.read(session, self._block, offset, dest, self.callback("got_block"))

    def got_block(self, result: ReadResult):
        t_arrival = time.monotonic()
        segment = result.offset // (self._workers * self._block)
        if result.error is not None:
            mismatch = result.error
        else:
            mismatch = first_mismatch(self._dest.pop(segment), result.offset)
        exposed = max(0.0, t_arrival - self._idle_since)
        nxt = segment + 1
        if nxt < self._segments:
            if nxt in self._sessions:
                self._issue(nxt)
            else:
                self._want_issue = nxt
        if self._compute > 0:
            deadline = time.monotonic() + self._compute
            while time.monotonic() < deadline:
                pass
        self._idle_since = time.monotonic()
        self.runtime.deliver(self._report, (self._index, segment, exposed, mismatch))


class _SegmentFeeder(Actor):
    """Keeps at most two segment sessions open: segment k+1 is started as
    soon as k's session is ready, and k is closed once every worker has
    consumed its block of k. Relays worker reports to the main thread."""

    def __init__(self, svc, file, workers: int, block: int, segments: int, out):
        self._svc = svc
        self._file = file
        self._workers = workers
        self._block = block
        self._segments = segments
        self._out = out
        self._team = None  # wired before the first message
        self._opened = 0
        self._sessions: dict[int, object] = {}
        self._done: dict[int, int] = {}

    def start(self, _):
        self._open_next()

    def _open_next(self) -> None:
        if self._opened >= self._segments:
            return
        nbytes = self._workers * self._block
        self._svc.start_read_session(
            self._file, nbytes, self._opened * nbytes, self.callback("session_up")
        )

    def session_up(self, result):
        if not result.ok:
            self.runtime.deliver(self._out, ("error", f"session failed: {result.error}"))
            return
        segment = self._opened
        self._opened += 1
        self._sessions[segment] = result.session
        self._team.broadcast("session_ready", (segment, result.session))
        self.runtime.deliver(self._out, ("session", segment, result.session))
        self._open_next()

    def block_done(self, report):
        _, segment, _, _ = report
        self.runtime.deliver(self._out, ("block",) + tuple(report))
        self._done[segment] = self._done.get(segment, 0) + 1
        if self._done[segment] == self._workers:
            self._svc.close_read_session(self._sessions[segment], self.callback("closed"))

    def closed(self, result):
        if not result.ok:
            self.runtime.deliver(self._out, ("error", f"session close failed: {result.error}"))


def demo_pipeline(cfg: BenchConfig) -> list[BenchRecord]:
    cfg.validate()
    workers = cfg.clients
    block = cfg.block_size
    segments = cfg.segments
    need = workers * block * segments
    if cfg.file_size < need:
        raise ValueError(
            f"pipeline needs {need} bytes ({workers} workers x {block} x {segments}), "
            f"file has {cfg.file_size}"
        )
    if cfg.backend == "sim":
        block_read = SimBackendConfig(
            cfg.stripes, cfg.stripe_width, cfg.overhead, cfg.bandwidth, cfg.file_path
        ).service_time(min(block, cfg.stripe_width))
    else:
        block_read = 1e-3
    compute_seconds = cfg.compute_factor * block_read
    records = []
    with start_runtime(cfg.runtime_config()) as rt:
        svc = InputService(rt, cfg.service_factory(), routing=cfg.routing)
        file = svc.open_sync(cfg.file_path, FileOptions(workers))
        for rep in range(cfg.repetitions):
            box = rt.mailbox()
            feeder = _SegmentFeeder(svc, file, workers, block, segments, box.callback("post"))
            feeder_ref = rt.create_singleton(lambda: feeder)
            team = rt.create_array(
                workers,
                lambda i: _PipelineWorker(
                    svc, i, workers, block, segments, compute_seconds,
                    rt.callback_for(feeder_ref, "block_done"),
                ),
                round_robin_placement(workers, cfg.executors),
            )
            feeder._team = team
            t_start = time.monotonic()
            rt.send_to(feeder_ref, "start")
            sessions = {}
            blocks = 0
            exposed_total = 0.0
            while blocks < workers * segments:
                msg = box.take(timeout=600.0)
                if msg[0] == "error":
                    raise VerificationError(msg[1])
                if msg[0] == "session":
                    sessions[msg[1]] = msg[2]
                    continue
                _, _, _, exposed, mismatch = msg
                if mismatch is not None:
                    raise VerificationError(f"pipeline block failed: {msg}")
                exposed_total += exposed
                blocks += 1
            makespan = time.monotonic() - t_start
            rt.await_quiescence(timeout=120.0)
            io_total = sum(svc.metrics_snapshot(s).io_time for s in sessions.values())
            # share of worker time not spent waiting for block data: 1 when
            # compute fully covers the reads, 0 when every read is waited out
            hidden = 1.0 - exposed_total / (makespan * workers)
            records.append(
                BenchRecord(
                    mode=cfg.mode,
                    clients=workers,
                    readers=workers,
                    repetition=rep,
                    makespan=makespan,
                    throughput=need / makespan,
                    background_fraction=min(1.0, max(0.0, hidden)),
                    io_time=io_total,
                )
            )
            for ref in team.refs:
                rt.destroy(ref)
            rt.destroy(feeder_ref)
            rt.destroy(box.ref)
        svc.close_sync(file)
    return records


# ---------------------------------------------------------------------------

_RUNNERS = {
    "naive": bench_naive,
    "buffered": bench_buffered,
    "overlap": bench_overlap,
    "migration": bench_migration,
    "io-vs-net": bench_io_vs_net,
    "pipeline": demo_pipeline,
}


def run_mode(cfg: BenchConfig) -> list[BenchRecord]:
    cfg.validate()
    records = _RUNNERS[cfg.mode](cfg)
    if cfg.csv_path:
        write_csv(cfg.csv_path, records)
    return records
