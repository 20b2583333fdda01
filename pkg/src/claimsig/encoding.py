"""Canonical, length-prefixed binary encoding used for every hash preimage.

Each value is a one-byte tag followed by its body:

====  ==========  ==================================================
tag   type        body
====  ==========  ==================================================
``n`` None        (empty)
``t`` True        (empty)
``f`` False       (empty)
``i`` int         8 bytes, signed big-endian two's complement
``b`` bytes       u32 big-endian length, raw bytes
``s`` str         u32 big-endian length, UTF-8 bytes
``l`` list/tuple  u32 big-endian item count, encoded items
``m`` dict        u32 big-endian entry count, then (key, value) pairs
                  with ``str`` keys sorted by their UTF-8 bytes
====  ==========  ==================================================

The format is prefix-free, so distinct values never share an encoding.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Any

from claimsig.errors import EncodingError

_INT_MIN = -(2**63)
_INT_MAX = 2**63 - 1


def encode(value: Any) -> bytes:
    out = bytearray()
    _encode_into(value, out)
    return bytes(out)


def _encode_into(value: Any, out: bytearray) -> None:
    # bool before int: bool is an int subclass
    if value is None:
        out += b"n"
    elif value is True:
        out += b"t"
    elif value is False:
        out += b"f"
    elif isinstance(value, int):
        if not _INT_MIN <= value <= _INT_MAX:
            raise EncodingError(f"integer out of 64-bit range: {value}")
        out += b"i" + struct.pack(">q", value)
    elif isinstance(value, (bytes, bytearray, memoryview)):
        raw = bytes(value)
        out += b"b" + struct.pack(">I", len(raw)) + raw
    elif isinstance(value, str):
        raw = value.encode("utf-8")
        out += b"s" + struct.pack(">I", len(raw)) + raw
    elif isinstance(value, (list, tuple)):
        out += b"l" + struct.pack(">I", len(value))
        for item in value:
            _encode_into(item, out)
    elif isinstance(value, dict):
        keys = list(value)
        if not all(isinstance(k, str) for k in keys):
            raise EncodingError("map keys must be str")
        keys.sort(key=lambda k: k.encode("utf-8"))
        out += b"m" + struct.pack(">I", len(keys))
        for k in keys:
            _encode_into(k, out)
            _encode_into(value[k], out)
    elif hasattr(value, "value") and isinstance(value.value, str):
        # str-valued enums encode as their value
        _encode_into(value.value, out)
    else:
        raise EncodingError(f"cannot encode {type(value).__name__}")


def decode(data: bytes) -> Any:
    value, pos = _decode_at(bytes(data), 0)
    if pos != len(data):
        raise EncodingError(f"trailing bytes after offset {pos}")
    return value


def _take(data: bytes, pos: int, n: int) -> tuple[bytes, int]:
    end = pos + n
    if end > len(data):
        raise EncodingError("truncated input")
    return data[pos:end], end


def _decode_at(data: bytes, pos: int) -> tuple[Any, int]:
    tag, pos = _take(data, pos, 1)
    if tag == b"n":
        return None, pos
    if tag == b"t":
        return True, pos
    if tag == b"f":
        return False, pos
    if tag == b"i":
        raw, pos = _take(data, pos, 8)
        return struct.unpack(">q", raw)[0], pos
    if tag in (b"b", b"s", b"l", b"m"):
        raw, pos = _take(data, pos, 4)
        (n,) = struct.unpack(">I", raw)
        if tag == b"b":
            return _take(data, pos, n)
        if tag == b"s":
            body, pos = _take(data, pos, n)
            try:
                return body.decode("utf-8"), pos
            except UnicodeDecodeError as exc:
                raise EncodingError("invalid utf-8 in string") from exc
        if tag == b"l":
            items = []
            for _ in range(n):
                item, pos = _decode_at(data, pos)
                items.append(item)
            return items, pos
        result: dict[str, Any] = {}
        prev: bytes | None = None
        for _ in range(n):
            key, pos = _decode_at(data, pos)
            if not isinstance(key, str):
                raise EncodingError("map key is not a string")
            kb = key.encode("utf-8")
            if prev is not None and kb <= prev:
                raise EncodingError("map keys not in canonical order")
            prev = kb
            result[key], pos = _decode_at(data, pos)
        return result, pos
    raise EncodingError(f"unknown tag {tag!r} at offset {pos - 1}")


def digest(value: Any) -> bytes:
    """SHA-256 of the canonical encoding of ``value``."""
    return hashlib.sha256(encode(value)).digest()
