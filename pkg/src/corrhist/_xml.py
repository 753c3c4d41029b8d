"""Shared XML plumbing: escaping, gzip detection, small parse helpers.

Output uses UTF-8 and only the five standard character escapes, so that
serialized bytes are a pure function of the value being written.
"""

from __future__ import annotations

import gzip
import io
from typing import BinaryIO

GZIP_MAGIC = b"\x1f\x8b"


def escape_text(value: str) -> str:
    """Escape character data."""
    if "&" in value:
        value = value.replace("&", "&amp;")
    if "<" in value:
        value = value.replace("<", "&lt;")
    if ">" in value:
        value = value.replace(">", "&gt;")
    return value


def escape_attr(value: str) -> str:
    """Escape an attribute value (always double-quoted by our writers)."""
    value = escape_text(value)
    if '"' in value:
        value = value.replace('"', "&quot;")
    return value


def open_source(source: bytes | str | BinaryIO) -> BinaryIO:
    """Return a binary stream over ``source``, decompressing gzip content.

    Accepts raw bytes, a filesystem path, or an already-open binary stream;
    compression is detected from the magic bytes, never from the name.
    """
    if isinstance(source, bytes):
        stream: BinaryIO = io.BytesIO(source)
    elif isinstance(source, str):
        stream = open(source, "rb")
    else:
        stream = source
    head = stream.read(2)
    seekable = getattr(stream, "seekable", None)
    if callable(seekable) and seekable():
        stream.seek(-len(head), io.SEEK_CUR)
        rewound = stream
    else:
        rewound = _Prepended(head, stream)  # type: ignore[assignment]
    if head == GZIP_MAGIC:
        return gzip.GzipFile(fileobj=rewound, mode="rb")  # type: ignore[return-value]
    return rewound


class _Prepended(io.RawIOBase):
    """Binary stream with a sniffed prefix pushed back in front."""

    def __init__(self, head: bytes, rest: BinaryIO):
        self._head = head
        self._rest = rest

    def readable(self) -> bool:
        return True

    def read(self, size: int = -1) -> bytes:
        if self._head:
            if size < 0 or size >= len(self._head):
                out, self._head = self._head, b""
                tail = self._rest.read(size - len(out) if size > 0 else size)
                return out + tail
            out, self._head = self._head[:size], self._head[size:]
            return out
        return self._rest.read(size)
