"""Keyed block scrambling of composites (and of RGB images for the baseline).

Encryption runs four steps on a grid of ``B x B`` blocks indexed in
row-major raster order:

1. divide the image into blocks;
2. permute the blocks, ``dest[i] = src[perm[i]]``, with ``perm`` a
   Fisher-Yates shuffle driven by the K1 stream;
3. apply one of the eight dihedral symmetries to every block, chosen by
   the K2 stream (``code = word % 8``);
4. complement every pixel (``p ^ 255``) of the blocks whose K3 bit is 1.

Decryption undoes the steps in reverse order.  A dihedral ``code`` encodes
``code & 3`` counter-clockwise quarter turns followed, when ``code & 4``
is set, by a left-right mirror.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .composite import Composite
from .errors import GeometryError
from .keystream import ALGORITHM, KeySet, KeyStream
from .pixelcore import as_rgb

__all__ = [
    "BLOCK_SIZES",
    "SCHEME_GRAY",
    "SCHEME_COLOR",
    "BlockGrid",
    "BlockTransform",
    "count_blocks",
    "divide_blocks",
    "fisher_yates",
    "permutation_from_key",
    "transform_codes_from_key",
    "negpos_bits_from_key",
    "apply_dihedral",
    "invert_dihedral",
    "dihedral_displacement",
    "permute_blocks",
    "transform_blocks",
    "negpos_blocks",
    "encrypt",
    "decrypt",
    "encrypt_color_baseline",
    "decrypt_color_baseline",
    "keyspace_bits",
    "cipher_metadata",
]

BLOCK_SIZES = (8, 16)
SCHEME_GRAY = "grayscale-block-scrambling"
SCHEME_COLOR = "color-block-scrambling"
# pixel complement for L = 8 bits
_COMPLEMENT = np.uint8(2**8 - 1)


@dataclass(frozen=True)
class BlockTransform:
    """Per-block transform: rotation in degrees, mirror, complement."""

    rotation: int = 0
    flip: bool = False
    negate: bool = False

    def __post_init__(self):
        if self.rotation not in (0, 90, 180, 270):
            raise ValueError(f"rotation must be a multiple of 90 degrees, got {self.rotation}")

    @property
    def dihedral_code(self) -> int:
        return self.rotation // 90 + 4 * int(self.flip)

    @classmethod
    def from_codes(cls, dihedral: int, negate: int | bool = False) -> "BlockTransform":
        if not 0 <= dihedral < 8:
            raise ValueError(f"dihedral code must be in [0, 8), got {dihedral}")
        return cls(90 * (dihedral & 3), bool(dihedral & 4), bool(negate))


@dataclass(frozen=True)
class BlockGrid:
    """Blocks of an image, shape ``(n_blocks, block_h, block_w[, channels])``.

    ``backing`` keeps the source image so samples outside the block grid
    (only possible with ``truncate=True``) survive a round trip untouched.
    """

    blocks: np.ndarray
    block_w: int
    block_h: int
    cols: int
    rows: int
    backing: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.cols * self.rows

    def with_blocks(self, blocks: np.ndarray) -> "BlockGrid":
        return BlockGrid(blocks, self.block_w, self.block_h, self.cols, self.rows, self.backing)

    def to_image(self) -> np.ndarray:
        bh, bw = self.block_h, self.block_w
        tail = self.blocks.shape[3:]
        tiled = (
            self.blocks.reshape((self.rows, self.cols, bh, bw) + tail)
            .swapaxes(1, 2)
            .reshape((self.rows * bh, self.cols * bw) + tail)
        )
        out = self.backing.copy()
        out[: self.rows * bh, : self.cols * bw] = tiled
        return out


def count_blocks(width: int, height: int, block_w: int, block_h: int) -> int:
    """Number of whole blocks that fit: floor(M/Bx) * floor(N/By)."""
    return (width // block_w) * (height // block_h)


def divide_blocks(image, block_w: int = 8, block_h: int | None = None, *, truncate: bool = False) -> BlockGrid:
    """Split a plane (or an ``(N, M, C)`` image) into non-overlapping blocks.

    With ``truncate=False`` the image size must be a multiple of the block
    size.  With ``truncate=True`` trailing rows/columns that do not fill a
    block are left out of the grid, as the floor in the block count implies.
    """
    block_h = block_w if block_h is None else block_h
    for b in (block_w, block_h):
        if b not in BLOCK_SIZES:
            raise GeometryError(f"unsupported block size {b}; use one of {BLOCK_SIZES}")
    image = np.asarray(image)
    if image.ndim not in (2, 3):
        raise GeometryError(f"cannot divide an array of shape {image.shape} into blocks")
    height, width = image.shape[:2]
    if not truncate and (width % block_w or height % block_h):
        raise GeometryError(
            f"image {width}x{height} is not a multiple of the {block_w}x{block_h} block size"
        )
    cols, rows = width // block_w, height // block_h
    if cols * rows == 0:
        raise GeometryError(f"image {width}x{height} is smaller than one block")
    tail = image.shape[2:]
    blocks = (
        image[: rows * block_h, : cols * block_w]
        .reshape((rows, block_h, cols, block_w) + tail)
        .swapaxes(1, 2)
        .reshape((rows * cols, block_h, block_w) + tail)
        .copy()
    )
    return BlockGrid(blocks, block_w, block_h, cols, rows, image.copy())


def fisher_yates(n: int, stream: KeyStream) -> np.ndarray:
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = stream.randbelow(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.int64)


def permutation_from_key(k1: bytes, n: int) -> np.ndarray:
    return fisher_yates(n, KeyStream(k1))


def transform_codes_from_key(k2: bytes, n: int) -> np.ndarray:
    # 8 divides 2**32, so no rejection is needed
    return (KeyStream(k2).words(n) % 8).astype(np.uint8)


def negpos_bits_from_key(k3: bytes, n: int) -> np.ndarray:
    return KeyStream(k3).bits(n)


def apply_dihedral(blocks: np.ndarray, code: int) -> np.ndarray:
    """Transform a stack of blocks ``(n, h, w, ...)`` by one dihedral code."""
    out = np.rot90(blocks, code & 3, axes=(1, 2))
    if code & 4:
        out = np.flip(out, axis=2)
    return out


def invert_dihedral(blocks: np.ndarray, code: int) -> np.ndarray:
    out = np.flip(blocks, axis=2) if code & 4 else blocks
    return np.rot90(out, -(code & 3), axes=(1, 2))


def dihedral_displacement(code: int, dr: int, dc: int) -> tuple[int, int]:
    """Where a (row, col) offset inside a block ends up after ``code``."""
    for _ in range(code & 3):
        dr, dc = -dc, dr
    if code & 4:
        dc = -dc
    return dr, dc


def permute_blocks(g: BlockGrid, k1: bytes, *, inverse: bool = False) -> BlockGrid:
    perm = permutation_from_key(k1, g.n_blocks)
    if inverse:
        out = np.empty_like(g.blocks)
        out[perm] = g.blocks
        return g.with_blocks(out)
    return g.with_blocks(g.blocks[perm])


def transform_blocks(g: BlockGrid, k2: bytes, *, inverse: bool = False) -> BlockGrid:
    if g.block_w != g.block_h:
        raise GeometryError("quarter-turn rotations need square blocks")
    codes = transform_codes_from_key(k2, g.n_blocks)
    out = g.blocks.copy()
    fn = invert_dihedral if inverse else apply_dihedral
    for code in range(1, 8):
        sel = codes == code
        if sel.any():
            out[sel] = fn(g.blocks[sel], code)
    return g.with_blocks(out)


def negpos_blocks(g: BlockGrid, k3: bytes) -> BlockGrid:
    """Complement the blocks whose key bit is set.  Self-inverse."""
    bits = negpos_bits_from_key(k3, g.n_blocks).astype(bool)
    out = g.blocks.copy()
    out[bits] ^= _COMPLEMENT
    return g.with_blocks(out)


def _scramble(image: np.ndarray, keys: KeySet, block: int) -> np.ndarray:
    g = divide_blocks(image, block, block)
    g = permute_blocks(g, keys.k1)
    g = transform_blocks(g, keys.k2)
    g = negpos_blocks(g, keys.k3)
    return g.to_image()


def _unscramble(image: np.ndarray, keys: KeySet, block: int) -> np.ndarray:
    g = divide_blocks(image, block, block)
    g = negpos_blocks(g, keys.k3)
    g = transform_blocks(g, keys.k2, inverse=True)
    g = permute_blocks(g, keys.k1, inverse=True)
    return g.to_image()


def cipher_metadata(scheme: str, block: int) -> dict[str, Any]:
    return {"scheme": scheme, "block_width": block, "block_height": block, "stream": ALGORITHM}


def _check_square(block_w: int, block_h: int | None) -> int:
    block_h = block_w if block_h is None else block_h
    if block_w != block_h:
        raise GeometryError(f"blocks must be square, got {block_w}x{block_h}")
    if block_w not in BLOCK_SIZES:
        raise GeometryError(f"unsupported block size {block_w}; use one of {BLOCK_SIZES}")
    return block_w


def encrypt(c: Composite, keys: KeySet, block_w: int = 8, block_h: int | None = None) -> Composite:
    """Scramble a plaintext composite.  Layout and size are unchanged."""
    block = _check_square(block_w, block_h)
    if c.cipher is not None:
        raise ValueError("composite is already encrypted")
    plane = _scramble(c.plane, keys, block)
    return c.replace(plane=plane, cipher=cipher_metadata(SCHEME_GRAY, block))


def decrypt(c: Composite, keys: KeySet, block_w: int | None = None, block_h: int | None = None) -> Composite:
    """Undo :func:`encrypt`.  Block size comes from the composite metadata."""
    meta = c.cipher
    if meta is None:
        raise ValueError("composite carries no cipher metadata; it is not encrypted")
    if meta.get("scheme") != SCHEME_GRAY:
        raise GeometryError(f"not a grayscale-scrambled composite: {meta.get('scheme')!r}")
    if meta.get("stream") != ALGORITHM:
        raise GeometryError(f"unknown keystream algorithm {meta.get('stream')!r}")
    block = _check_square(int(meta["block_width"]), int(meta["block_height"]))
    if block_w is not None and _check_square(block_w, block_h) != block:
        raise GeometryError(f"block size {block_w} does not match the recorded {block}")
    plane = _unscramble(c.plane, keys, block)
    return c.replace(plane=plane, cipher=None)


def encrypt_color_baseline(img, keys: KeySet, block: int = 16) -> np.ndarray:
    """Scramble an RGB image, the same block operations on all three channels."""
    block = _check_square(block, block)
    return _scramble(as_rgb(img), keys, block)


def decrypt_color_baseline(img, keys: KeySet, block: int = 16) -> np.ndarray:
    block = _check_square(block, block)
    return _unscramble(as_rgb(img), keys, block)


def keyspace_bits(n_blocks: int) -> float:
    """log2 of the number of keyed outcomes for ``n_blocks`` blocks.

    ``n!`` orderings times 8 dihedral transforms and 2 complement states per
    block: ``log2(n!) + 3n + n``.
    """
    if n_blocks < 1:
        raise ValueError("need at least one block")
    return math.fsum(math.log2(k) for k in range(2, n_blocks + 1)) + 4 * n_blocks
