"""Minimal binary PGM (P5) / PPM (P6) reader and writer, 8-bit only."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import FormatError

__all__ = ["decode_netpbm", "encode_netpbm", "read_netpbm", "write_netpbm"]

_WHITESPACE = b" \t\r\n\v\f"


def _header_fields(data: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` integer header fields after the magic number.

    Returns the fields and the offset of the first raster byte.
    """
    fields = []
    pos = 2
    n = len(data)
    while len(fields) < count:
        while pos < n and (data[pos] in _WHITESPACE or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise FormatError(f"bad netpbm header field {token!r}")
        fields.append(int(token))
    # exactly one whitespace byte separates the header from the raster
    if pos >= n or data[pos] not in _WHITESPACE:
        raise FormatError("truncated netpbm header")
    return fields, pos + 1


def decode_netpbm(data: bytes) -> np.ndarray:
    """Decode P5 to an ``(N, M)`` array or P6 to ``(N, M, 3)``."""
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"not a binary PGM/PPM file (magic {magic!r})")
    (width, height, maxval), offset = _header_fields(data, 3)
    if width < 1 or height < 1:
        raise FormatError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    size = width * height * channels
    raster = data[offset : offset + size]
    if len(raster) != size:
        raise FormatError(f"raster truncated: expected {size} bytes, got {len(raster)}")
    a = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    return a[..., 0].copy() if channels == 1 else a.copy()


def encode_netpbm(a) -> bytes:
    a = np.asarray(a)
    if a.dtype != np.uint8:
        raise FormatError(f"netpbm writer needs uint8 samples, got {a.dtype}")
    if a.ndim == 2:
        magic = b"P5"
    elif a.ndim == 3 and a.shape[2] == 3:
        magic = b"P6"
    else:
        raise FormatError(f"cannot write array of shape {a.shape} as PGM/PPM")
    height, width = a.shape[:2]
    header = b"%s\n%d %d\n255\n" % (magic, width, height)
    return header + np.ascontiguousarray(a).tobytes()


def read_netpbm(path: str | os.PathLike) -> np.ndarray:
    return decode_netpbm(Path(path).read_bytes())


def write_netpbm(path: str | os.PathLike, a) -> None:
    Path(path).write_bytes(encode_netpbm(a))
