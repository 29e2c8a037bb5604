"""Little-endian record reader shared by the feature and checkpoint formats."""

from __future__ import annotations

import struct

import numpy as np

from errors import UnsupportedFormatError


class BinaryReader:
    """Cursor over a byte buffer that reports the failing offset."""

    def __init__(self, buf: bytes, path: str | None = None, offset: int = 0):
        self.buf = buf
        self.path = path
        self.offset = offset

    def fail(self, message: str) -> UnsupportedFormatError:
        return UnsupportedFormatError(message, path=self.path, offset=self.offset)

    def _need(self, size: int) -> None:
        if self.offset + size > len(self.buf):
            raise self.fail(f"truncated: need {size} bytes, {len(self.buf) - self.offset} left")

    def take(self, fmt: str) -> tuple:
        size = struct.calcsize(fmt)
        self._need(size)
        values = struct.unpack_from(fmt, self.buf, self.offset)
        self.offset += size
        return values

    def take_bytes(self, n: int) -> bytes:
        self._need(n)
        out = self.buf[self.offset:self.offset + n]
        self.offset += n
        return out

    def take_array(self, count: int, dtype: str = "<f4") -> np.ndarray:
        raw = self.take_bytes(count * np.dtype(dtype).itemsize)
        return np.frombuffer(raw, dtype=dtype, count=count)

    @property
    def remaining(self) -> int:
        return len(self.buf) - self.offset

    def at_end(self) -> bool:
        return self.remaining <= 0
