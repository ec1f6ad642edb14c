"""Deterministic keyed random streams.

The stream for a 256-bit key ``k`` is the concatenation of
``SHA-256(k || counter)`` for ``counter = 0, 1, 2, ...`` with the counter
encoded as 8 big-endian bytes.  Integers are read as big-endian 32-bit
words; bounded integers use rejection sampling so every value in
``[0, n)`` is exactly equally likely.  The algorithm identifier
``sha256-ctr/v1`` is written into ciphertext metadata and must never
change meaning.
"""

from __future__ import annotations

import hashlib
import os
import secrets
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import KeyFormatError

__all__ = ["ALGORITHM", "KEY_BYTES", "KeyStream", "KeySet"]

ALGORITHM = "sha256-ctr/v1"
KEY_BYTES = 32
_WORD = 1 << 32


class KeyStream:
    def __init__(self, key: bytes):
        if len(key) != KEY_BYTES:
            raise KeyFormatError(f"keys are {KEY_BYTES} bytes, got {len(key)}")
        self._key = bytes(key)
        self._counter = 0
        self._buf = bytearray()

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(self._key + self._counter.to_bytes(8, "big")).digest()
            self._buf += block
            self._counter += 1
        out = bytes(self._buf[:n])
        del self._buf[:n]
        return out

    def words(self, n: int) -> np.ndarray:
        """``n`` uniform 32-bit words."""
        return np.frombuffer(self.read(4 * n), dtype=">u4").astype(np.uint32)

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` for ``1 <= n <= 2**32``."""
        if not 1 <= n <= _WORD:
            raise ValueError(f"bound out of range: {n}")
        limit = _WORD - (_WORD % n)
        while True:
            w = int.from_bytes(self.read(4), "big")
            if w < limit:
                return w % n

    def bits(self, n: int) -> np.ndarray:
        """``n`` uniform bits, one per word (least significant bit)."""
        return (self.words(n) & 1).astype(np.uint8)


def _parse_hex_key(text: str, label: str) -> bytes:
    text = text.strip()
    if len(text) != 2 * KEY_BYTES:
        raise KeyFormatError(
            f"{label} must be {2 * KEY_BYTES} hex characters, got {len(text)}"
        )
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise KeyFormatError(f"{label} is not valid hexadecimal") from None


@dataclass(frozen=True, repr=False)
class KeySet:
    """The three independent secret keys.

    ``k1`` drives the block permutation, ``k2`` the per-block rotation and
    flip, ``k3`` the negative-positive bits.
    """

    k1: bytes
    k2: bytes
    k3: bytes

    def __post_init__(self):
        for name in ("k1", "k2", "k3"):
            v = getattr(self, name)
            if not isinstance(v, (bytes, bytearray)) or len(v) != KEY_BYTES:
                raise KeyFormatError(f"{name} must be {KEY_BYTES} bytes")

    def __repr__(self):
        return "KeySet(<redacted>)"

    def streams(self) -> tuple[KeyStream, KeyStream, KeyStream]:
        return KeyStream(self.k1), KeyStream(self.k2), KeyStream(self.k3)

    @classmethod
    def from_hex(cls, k1: str, k2: str, k3: str) -> "KeySet":
        return cls(
            _parse_hex_key(k1, "K1"), _parse_hex_key(k2, "K2"), _parse_hex_key(k3, "K3")
        )

    @classmethod
    def parse(cls, text: str) -> "KeySet":
        """Parse a key file: three lines of hex, blank lines and ``#`` comments ignored."""
        lines = [
            ln.strip()
            for ln in text.splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")
        ]
        if len(lines) != 3:
            raise KeyFormatError(f"key file must hold exactly 3 keys, found {len(lines)}")
        return cls.from_hex(*lines)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "KeySet":
        return cls.parse(Path(path).read_text())

    @classmethod
    def generate(cls) -> "KeySet":
        return cls(*(secrets.token_bytes(KEY_BYTES) for _ in range(3)))

    @classmethod
    def from_seed(cls, seed: int | str) -> "KeySet":
        """Derive a reproducible key set from a seed.  For experiments only."""
        base = f"grayetc-test-keys:{seed}".encode()
        return cls(*(hashlib.sha256(base + bytes([i])).digest() for i in (1, 2, 3)))

    def to_text(self) -> str:
        return "".join(k.hex() + "\n" for k in (self.k1, self.k2, self.k3))
