"""Byte-level message encoding: unsigned LEB128 varints plus a few helpers."""
from __future__ import annotations

import struct


class Writer:
    def __init__(self):
        self._buf = bytearray()

    def uint(self, x: int) -> "Writer":
        x = int(x)
        if x < 0:
            raise ValueError("uint must be nonnegative")
        while True:
            byte = x & 0x7F
            x >>= 7
            if x:
                self._buf.append(byte | 0x80)
            else:
                self._buf.append(byte)
                return self

    def sint(self, x: int) -> "Writer":
        x = int(x)
        return self.uint(2 * x if x >= 0 else -2 * x - 1)

    def f64(self, x: float) -> "Writer":
        self._buf += struct.pack("<d", float(x))
        return self

    def uints(self, xs) -> "Writer":
        xs = list(xs)
        self.uint(len(xs))
        for x in xs:
            self.uint(x)
        return self

    def getvalue(self) -> bytes:
        return bytes(self._buf)


class Reader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def uint(self) -> int:
        shift = result = 0
        while True:
            if self._pos >= len(self._data):
                raise ValueError("truncated varint")
            byte = self._data[self._pos]
            self._pos += 1
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return result
            shift += 7

    def sint(self) -> int:
        z = self.uint()
        return z >> 1 if not z & 1 else -((z + 1) >> 1)

    def f64(self) -> float:
        if self._pos + 8 > len(self._data):
            raise ValueError("truncated float")
        (x,) = struct.unpack_from("<d", self._data, self._pos)
        self._pos += 8
        return x

    def uints(self) -> list[int]:
        return [self.uint() for _ in range(self.uint())]

    @property
    def done(self) -> bool:
        return self._pos >= len(self._data)


def varint_bytes(x: int) -> int:
    """Encoded length in bytes of a nonnegative integer."""
    return max(1, -(-int(x).bit_length() // 7))
