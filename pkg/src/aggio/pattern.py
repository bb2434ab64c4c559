"""Deterministic test-file content: byte at offset x is x mod 251.

251 is prime and coprime with every power-of-two block size, so any
misalignment anywhere in the pipeline shows up as a mismatch. A slice can
be checked from its offset alone, no reference copy needed.
"""

from __future__ import annotations

import os
from pathlib import Path

PATTERN_PERIOD = 251
_TILE = bytes(range(PATTERN_PERIOD))


def pattern_slice(offset: int, length: int) -> bytes:
    """Expected file content for [offset, offset + length)."""
    if length < 0:
        raise ValueError(f"negative length: {length}")
    if length == 0:
        return b""
    shift = offset % PATTERN_PERIOD
    reps = (shift + length) // PATTERN_PERIOD + 1
    return (_TILE * reps)[shift : shift + length]


def generate_pattern_file(path: str | os.PathLike[str], size: int) -> Path:
    """Write a file of exactly `size` bytes following the pattern rule."""
    if size < 0:
        raise ValueError(f"negative size: {size}")
    path = Path(path)
    chunk = 8 << 20
    with open(path, "wb") as fh:
        written = 0
        while written < size:
            n = min(chunk, size - written)
            fh.write(pattern_slice(written, n))
            written += n
    return path


def first_mismatch(data: bytes | bytearray | memoryview, offset: int) -> int | None:
    """Offset within `data` of the first byte violating the rule, or None."""
    expected = pattern_slice(offset, len(data))
    if bytes(data) == expected:
        return None
    view = bytes(data)
    for i, (got, want) in enumerate(zip(view, expected)):
        if got != want:
            return i
    return None
