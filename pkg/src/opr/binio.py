"""Little-endian readers/writers shared by the binary artifact formats."""

from __future__ import annotations

import struct

from .errors import FormatError


class Reader:
    """Cursor over bytes that reports the offset of any shortfall."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise FormatError(
                f"truncated {what}: expected {n} bytes, got {len(self.data) - self.pos}",
                self.pos,
            )
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk

    def magic(self, expected: bytes) -> None:
        got = self.take(len(expected), "magic")
        if got != expected:
            raise FormatError(f"bad magic {got!r}, expected {expected!r}", self.pos - len(expected))

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f32s(self, n: int, what: str) -> tuple[float, ...]:
        return struct.unpack(f"<{n}f", self.take(4 * n, what))

    def f64s(self, n: int, what: str) -> tuple[float, ...]:
        return struct.unpack(f"<{n}d", self.take(8 * n, what))

    def expect_end(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(f"{len(self.data) - self.pos} trailing bytes", self.pos)

    def expect_version(self, version: int) -> None:
        got = self.u32("version")
        if got != version:
            raise FormatError(f"unsupported version {got}, expected {version}", self.pos - 4)


def u32(value: int) -> bytes:
    return struct.pack("<I", value)


def f32s(values) -> bytes:
    values = list(values)
    return struct.pack(f"<{len(values)}f", *values)


def f64s(values) -> bytes:
    values = list(values)
    return struct.pack(f"<{len(values)}d", *values)
