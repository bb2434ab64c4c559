"""Arithmetic for dividing a read window among buffer readers.

A session extent is split into disjoint, contiguous, near-equal chunks
(one per reader); a client request is mapped onto the minimal ordered set
of fragments that tile it. Everything here is pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SessionExtent:
    """Byte window [file_offset, file_offset + length) owned by num_readers readers."""

    file_offset: int
    length: int
    num_readers: int

    def __post_init__(self) -> None:
        if self.file_offset < 0:
            raise ValueError(f"negative file_offset: {self.file_offset}")
        if self.length < 0:
            raise ValueError(f"negative length: {self.length}")
        if self.num_readers < 1:
            raise ValueError(f"num_readers must be >= 1, got {self.num_readers}")

    @property
    def end(self) -> int:
        return self.file_offset + self.length

    def contains(self, offset: int, length: int) -> bool:
        return self.file_offset <= offset and offset + length <= self.end


@dataclass(frozen=True)
class ChunkSpec:
    """Half-open byte range [start, end) owned by one reader."""

    reader_index: int
    start: int
    end: int

    @property
    def size(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class FragmentPlan:
    """One reader's contribution to a request: file range and where it lands
    in the request's destination buffer."""

    reader_index: int
    file_start: int
    file_end: int
    dest_offset: int

    @property
    def length(self) -> int:
        return self.file_end - self.file_start


def chunk_bounds(extent: SessionExtent, i: int) -> ChunkSpec:
    """Chunk owned by reader i under the balanced block split.

    The remainder of length / num_readers goes to the lowest-indexed
    readers, so chunk sizes differ by at most one byte.
    """
    if not 0 <= i < extent.num_readers:
        raise IndexError(f"reader index {i} out of range [0, {extent.num_readers})")
    base, rem = divmod(extent.length, extent.num_readers)
    size = base + (1 if i < rem else 0)
    start = extent.file_offset + i * base + min(i, rem)
    return ChunkSpec(i, start, start + size)


def _reader_at(extent: SessionExtent, offset: int) -> int:
    """Index of the reader whose chunk contains the given file offset."""
    rel = offset - extent.file_offset
    base, rem = divmod(extent.length, extent.num_readers)
    boundary = rem * (base + 1)
    if rel < boundary:
        return rel // (base + 1)
    return rem + (rel - boundary) // base


def owners(extent: SessionExtent, req_offset: int, req_len: int) -> list[FragmentPlan]:
    """Minimal ordered fragment plans tiling [req_offset, req_offset + req_len).

    Fragments are ordered by file offset; dest_offset of each fragment is
    the cumulative length of the fragments before it. Raises ValueError
    for requests outside the extent (callers translate this into an API
    error payload).
    """
    if req_len < 0:
        raise ValueError(f"negative request length: {req_len}")
    if not extent.contains(req_offset, req_len):
        raise ValueError(
            f"request [{req_offset}, {req_offset + req_len}) outside extent "
            f"[{extent.file_offset}, {extent.end})"
        )
    if req_len == 0:
        return []
    plans: list[FragmentPlan] = []
    req_end = req_offset + req_len
    cursor = req_offset
    i = _reader_at(extent, req_offset)
    while cursor < req_end:
        chunk = chunk_bounds(extent, i)
        lo = max(cursor, chunk.start)
        hi = min(req_end, chunk.end)
        if hi > lo:
            plans.append(FragmentPlan(i, lo, hi, lo - req_offset))
            cursor = hi
        i += 1
    return plans


def round_robin_placement(n: int, num_executors: int) -> list[int]:
    """Element i goes to executor i mod num_executors."""
    return [i % num_executors for i in range(n)]
