"""Quantization tables, including the corpus-derived table for composites.

The derived table ("G-table") comes from the mean absolute DCT coefficient
at each of the 64 positions.  For one image with ``n`` blocks

    c(i, j) = mean_n |D_n(i, j)|

then averaged over a corpus of ``R`` images into ``cbar(i, j)``, and

    q(i, j) = ceil(cbar(1, 1) / cbar(i, j)) + epsilon.

Coefficients are those of the orthonormal 8x8 DCT-II applied to blocks
level-shifted by -128, i.e. exactly what a baseline JPEG encoder quantizes.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, GeometryError, GrayEtcError
from .pixelcore import as_plane

__all__ = [
    "DEFAULT_EPSILON",
    "STD_LUMA",
    "STD_CHROMA",
    "DegenerateCorpusError",
    "QuantTable",
    "CoeffMeanMatrix",
    "dct_matrix",
    "forward_dct",
    "forward_dct_block",
    "inverse_dct",
    "image_blocks",
    "image_coeff_mean",
    "corpus_mean",
    "derive_gtable",
    "composite_coeff_mean",
    "gtable_from_images",
    "quality_scale_factor",
    "scale_table",
]

DEFAULT_EPSILON = 16
_N = 8
# guards ceil() against 1-ulp noise on ratios that are integers in exact arithmetic
_RATIO_RTOL = 1e-12
# DCT round-off on flat blocks leaves |coefficients| around 1e-13
_ZERO_TOL = 1e-9

# ITU-T T.81 Annex K tables, natural (row-major) order
STD_LUMA = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)
STD_CHROMA = np.array(
    [
        [17, 18, 24, 47, 99, 99, 99, 99],
        [18, 21, 26, 66, 99, 99, 99, 99],
        [24, 26, 56, 99, 99, 99, 99, 99],
        [47, 66, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
    ],
    dtype=np.int64,
)


class DegenerateCorpusError(GrayEtcError, ValueError):
    """A mean coefficient magnitude is zero, so the table is undefined."""


@dataclass(frozen=True)
class QuantTable:
    """8x8 quantization step sizes in natural row-major order."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (_N, _N):
            raise FormatError(f"a quantization table is 8x8, got shape {v.shape}")
        if not np.all(v == np.round(v)):
            raise FormatError("quantization steps must be integers")
        v = v.astype(np.int64)
        if v.min() < 1 or v.max() > 65535:
            raise FormatError("quantization steps must lie in [1, 65535]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, idx):
        return self.values[idx]

    def __eq__(self, other):
        if not isinstance(other, QuantTable):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None

    def to_text(self) -> str:
        return "".join(" ".join(f"{int(x):d}" for x in row) + "\n" for row in self.values)

    @classmethod
    def parse(cls, text: str) -> "QuantTable":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if len(rows) != _N or any(len(r) != _N for r in rows):
            raise FormatError("a table file holds 8 lines of 8 integers")
        try:
            return cls(np.array([[int(x) for x in r] for r in rows]))
        except ValueError as e:
            raise FormatError(f"bad table entry: {e}") from e

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "QuantTable":
        return cls.parse(Path(path).read_text())

    def as_list(self) -> list[int]:
        return [int(x) for x in self.values.ravel()]


@dataclass(frozen=True)
class CoeffMeanMatrix:
    """Mean absolute DCT coefficient per position.

    ``n_blocks`` is the block count behind a single-image matrix; a corpus
    mean records its image count in ``n_images``.
    """

    values: np.ndarray
    n_blocks: int = 0
    n_images: int = 1

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (_N, _N):
            raise GeometryError(f"coefficient means are 8x8, got {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("coefficient means must be finite and non-negative")
        object.__setattr__(self, "values", v)


def dct_matrix(n: int = _N) -> np.ndarray:
    """Orthonormal DCT-II basis, ``C[u, x]``."""
    x = np.arange(n)
    u = x[:, None]
    c = np.cos((2 * x[None, :] + 1) * u * np.pi / (2 * n))
    c *= np.where(u == 0, math.sqrt(1.0 / n), math.sqrt(2.0 / n))
    return c


_C = dct_matrix()


def forward_dct(blocks) -> np.ndarray:
    """Level-shift and transform a stack of 8x8 pixel blocks ``(..., 8, 8)``.

    Rows of the result index vertical frequency, columns horizontal
    frequency; ``[..., 0, 0]`` is DC.
    """
    b = np.asarray(blocks, dtype=np.float64)
    if b.shape[-2:] != (_N, _N):
        raise GeometryError(f"DCT blocks must be 8x8, got trailing shape {b.shape[-2:]}")
    return _C @ (b - 128.0) @ _C.T


def forward_dct_block(pixels) -> np.ndarray:
    p = np.asarray(pixels)
    if p.shape != (_N, _N):
        raise GeometryError(f"expected an 8x8 block, got {p.shape}")
    return forward_dct(p)


def inverse_dct(coeffs) -> np.ndarray:
    """Inverse of :func:`forward_dct`, returning level-restored samples (float)."""
    return _C.T @ np.asarray(coeffs, dtype=np.float64) @ _C + 128.0


def image_blocks(plane) -> np.ndarray:
    p = as_plane(plane)
    h, w = p.shape
    if h % _N or w % _N:
        raise GeometryError(f"image {w}x{h} is not a multiple of 8")
    return p.reshape(h // _N, _N, w // _N, _N).swapaxes(1, 2).reshape(-1, _N, _N)


def image_coeff_mean(plane) -> CoeffMeanMatrix:
    """Mean |DCT coefficient| over all 8x8 blocks of one image."""
    blocks = image_blocks(plane)
    coeffs = np.abs(forward_dct(blocks))
    return CoeffMeanMatrix(coeffs.mean(axis=0), n_blocks=len(blocks), n_images=1)


def corpus_mean(per_image: Sequence[CoeffMeanMatrix] | Iterable[CoeffMeanMatrix]) -> CoeffMeanMatrix:
    """Entrywise mean of per-image matrices.

    Each entry is summed with ``math.fsum`` so the result is correctly
    rounded and independent of image order.
    """
    mats = list(per_image)
    if not mats:
        raise ValueError("corpus is empty")
    stack = np.stack([m.values for m in mats])
    r = len(mats)
    out = np.empty((_N, _N))
    for i in range(_N):
        for j in range(_N):
            out[i, j] = math.fsum(stack[:, i, j]) / r
    blocks = {m.n_blocks for m in mats}
    return CoeffMeanMatrix(out, n_blocks=blocks.pop() if len(blocks) == 1 else 0, n_images=r)


def derive_gtable(cbar: CoeffMeanMatrix | np.ndarray, epsilon: int = DEFAULT_EPSILON) -> QuantTable:
    """Step sizes ``ceil(cbar[0,0] / cbar[i,j]) + epsilon``."""
    v = cbar.values if isinstance(cbar, CoeffMeanMatrix) else np.asarray(cbar, dtype=np.float64)
    if v.shape != (_N, _N):
        raise GeometryError(f"coefficient means are 8x8, got {v.shape}")
    zeros = np.argwhere(v <= _ZERO_TOL)
    if len(zeros):
        i, j = zeros[0]
        raise DegenerateCorpusError(
            f"mean coefficient magnitude at position ({i + 1},{j + 1}) is zero; "
            "the corpus has no energy there"
        )
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    ratio = v[0, 0] / v
    steps = np.ceil(ratio * (1.0 - _RATIO_RTOL)).astype(np.int64)
    steps[0, 0] = 1
    steps += int(epsilon)
    if steps.max() > 65535:
        i, j = np.unravel_index(int(np.argmax(steps)), steps.shape)
        raise DegenerateCorpusError(
            f"step at position ({i + 1},{j + 1}) exceeds 65535; the corpus has almost no energy there"
        )
    return QuantTable(steps)


def quality_scale_factor(quality: int) -> int:
    """IJG percentage scaling for a quality factor in [1, 100]."""
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    return 5000 // quality if quality < 50 else 200 - 2 * quality


def scale_table(table: QuantTable | np.ndarray, quality: int, *, baseline: bool = True) -> QuantTable:
    """Scale a base table the way libjpeg's ``jpeg_add_quant_table`` does."""
    base = table.values if isinstance(table, QuantTable) else np.asarray(table, dtype=np.int64)
    s = quality_scale_factor(quality)
    q = (base * s + 50) // 100
    q = np.clip(q, 1, 255 if baseline else 32767)
    return QuantTable(q)


def composite_coeff_mean(rgb, sampling="420") -> CoeffMeanMatrix:
    """Coefficient statistics of the plaintext composite of an RGB image."""
    from .composite import assemble
    from .pixelcore import rgb_to_ycbcr

    return image_coeff_mean(assemble(rgb_to_ycbcr(rgb), sampling).plane)


def gtable_from_images(images: Iterable, sampling="420", epsilon: int = DEFAULT_EPSILON) -> QuantTable:
    """Full derivation from a corpus of RGB images."""
    return derive_gtable(corpus_mean(composite_coeff_mean(im, sampling) for im in images), epsilon)
