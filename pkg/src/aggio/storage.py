"""Positional-read backends: real OS files and a simulated striped file system.

The simulated backend returns byte-identical content to its backing file
but paces each call according to a contention model: the file is laid out
round-robin over S stripes in W-byte blocks, each stripe is a FIFO server,
and a piece of n bytes occupies its stripe for o + n/b (per-request
overhead plus streaming time). A single read_at call streams its pieces
sequentially, the way one reader drains one file descriptor; parallelism
comes only from concurrent calls. This makes throughput depend on how
many concurrent readers there are: too few miss stripe parallelism, too
many drown in per-request overhead.

predict_makespan replays the same model in virtual time, so wall-clock
behaviour of the concurrent system can be checked against an exact oracle.
"""

from __future__ import annotations

import heapq
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path


class BackendError(Exception):
    """A positional read could not be served."""


@dataclass(frozen=True)
class SimBackendConfig:
    """Striped file-system model parameters.

    stripes: number of independent FIFO servers
    stripe_width: bytes per round-robin block
    per_request_overhead: seconds a stripe is held per piece regardless of size
    stream_bandwidth: bytes/second a stripe delivers while streaming a piece
    backing: real file providing the content
    """

    stripes: int
    stripe_width: int
    per_request_overhead: float
    stream_bandwidth: float
    backing: str | os.PathLike[str] = ""

    def __post_init__(self) -> None:
        if self.stripes < 1:
            raise ValueError(f"stripes must be >= 1, got {self.stripes}")
        if self.stripe_width < 1:
            raise ValueError(f"stripe_width must be >= 1, got {self.stripe_width}")
        if self.per_request_overhead < 0:
            raise ValueError("per_request_overhead must be >= 0")
        if self.stream_bandwidth <= 0:
            raise ValueError("stream_bandwidth must be > 0")

    def stripe_of(self, offset: int) -> int:
        return (offset // self.stripe_width) % self.stripes

    def split(self, offset: int, length: int) -> list[tuple[int, int]]:
        """(stripe, nbytes) pieces of [offset, offset+length), cut at block bounds."""
        pieces: list[tuple[int, int]] = []
        end = offset + length
        cur = offset
        while cur < end:
            block_end = (cur // self.stripe_width + 1) * self.stripe_width
            nxt = min(end, block_end)
            pieces.append((self.stripe_of(cur), nxt - cur))
            cur = nxt
        return pieces

    def service_time(self, nbytes: int) -> float:
        return self.per_request_overhead + nbytes / self.stream_bandwidth


@dataclass(frozen=True)
class ReadAt:
    """A positional read request, with its issue time for oracle replay."""

    offset: int
    length: int
    issue_time: float = 0.0


class OsFileBackend:
    """Plain positional reads against a real file.

    read_at is safe to call concurrently from any number of threads; it
    never seeks shared state (os.pread).
    """

    def __init__(self, path: str | os.PathLike[str]):
        self.path = Path(path)
        try:
            self._fd = os.open(self.path, os.O_RDONLY)
        except OSError as exc:
            raise BackendError(f"cannot open {self.path}: {exc}") from exc
        self._size = os.fstat(self._fd).st_size
        self._lock = threading.Lock()
        self.read_count = 0
        self.calls: list[tuple[int, int]] = []
        self.record_calls = False

    def size(self) -> int:
        return self._size

    def read_at(self, offset: int, length: int) -> bytes:
        self._check_range(offset, length)
        with self._lock:
            self.read_count += 1
            if self.record_calls:
                self.calls.append((offset, length))
        if length == 0:
            return b""
        data = os.pread(self._fd, length, offset)
        if len(data) != length:
            raise BackendError(
                f"short read at {offset}: wanted {length}, got {len(data)}"
            )
        return data

    def _check_range(self, offset: int, length: int) -> None:
        if offset < 0 or length < 0 or offset + length > self._size:
            raise BackendError(
                f"range [{offset}, {offset + length}) outside file of {self._size} bytes"
            )

    def close(self) -> None:
        if self._fd >= 0:
            os.close(self._fd)
            self._fd = -1


class SimulatedBackend:
    """Striped-contention pacing over a real backing file.

    Content comes from the backing file; the call's wall-clock duration
    follows the stripe service model. Stripe state is a per-stripe
    next-free timestamp guarded by one lock; each piece reserves its
    service slot, then the caller sleeps until the slot ends before
    reserving the next piece (sequential streaming within one call).
    """

    def __init__(self, config: SimBackendConfig):
        if not config.backing:
            raise BackendError("simulated backend needs a backing file")
        self.config = config
        self._content = OsFileBackend(config.backing)
        self._lock = threading.Lock()
        self._stripe_free = [0.0] * config.stripes
        self.read_count = 0
        self.calls: list[tuple[int, int]] = []
        self.record_calls = False

    def size(self) -> int:
        return self._content.size()

    def read_at(self, offset: int, length: int) -> bytes:
        self._content._check_range(offset, length)
        with self._lock:
            self.read_count += 1
            if self.record_calls:
                self.calls.append((offset, length))
        data = self._content.read_at(offset, length) if length else b""
        # Stream the pieces: piece k+1 arrives when piece k completes. The
        # chained arrival is the virtual completion time, not the thread's
        # wake time, so a late wakeup never turns into phantom stripe idle;
        # ordering between concurrent calls still follows real arrival at
        # the lock.
        arrival = time.monotonic()
        for stripe, nbytes in self.config.split(offset, length):
            svc = self.config.service_time(nbytes)
            with self._lock:
                start = max(arrival, self._stripe_free[stripe])
                fin = start + svc
                self._stripe_free[stripe] = fin
            arrival = fin
            delay = fin - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        return data

    def close(self) -> None:
        self._content.close()


Backend = OsFileBackend | SimulatedBackend


def backend_factory(kind: str, sim: SimBackendConfig | None = None):
    """Factory mapping a path to a backend, for wiring into the input service."""
    if kind == "os":
        return lambda path: OsFileBackend(path)
    if kind == "sim":
        if sim is None:
            raise ValueError("sim backend needs a SimBackendConfig")
        from dataclasses import replace

        return lambda path: SimulatedBackend(replace(sim, backing=path))
    raise ValueError(f"unknown backend kind: {kind!r}")


@dataclass(order=True)
class _PieceEvent:
    when: float
    seq: int
    request: "_RequestState" = field(compare=False)


class _RequestState:
    __slots__ = ("pieces", "next_piece", "completion")

    def __init__(self, pieces: list[tuple[int, int]], issue: float):
        self.pieces = pieces
        self.next_piece = 0
        self.completion = issue


def predict_makespan(config: SimBackendConfig, requests: list[ReadAt]) -> float:
    """Completion time of the last request minus the first issue time, under
    the FIFO-per-stripe streaming model, computed by event simulation.

    Each request's pieces arrive one at a time: a piece is issued when the
    previous piece of the same request completes, queues FIFO at its
    stripe, and holds it for o + n/b. No wall clock is consumed.
    """
    if not requests:
        return 0.0
    stripe_free = [0.0] * config.stripes
    heap: list[_PieceEvent] = []
    states: list[_RequestState] = []
    t0 = min(r.issue_time for r in requests)
    for seq, req in enumerate(requests):
        state = _RequestState(config.split(req.offset, req.length), req.issue_time)
        states.append(state)
        if state.pieces:
            heapq.heappush(heap, _PieceEvent(req.issue_time, seq, state))
    seq_counter = len(requests)
    while heap:
        event = heapq.heappop(heap)
        state = event.request
        stripe, nbytes = state.pieces[state.next_piece]
        start = max(event.when, stripe_free[stripe])
        fin = start + config.service_time(nbytes)
        stripe_free[stripe] = fin
        state.next_piece += 1
        state.completion = fin
        if state.next_piece < len(state.pieces):
            heapq.heappush(heap, _PieceEvent(fin, seq_counter, state))
            seq_counter += 1
    return max(s.completion for s in states) - t0
