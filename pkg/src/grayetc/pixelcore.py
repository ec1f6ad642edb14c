"""Color conversion, 4:2:0 chroma resampling and quality/rate metrics.

Images are plain numpy arrays: a *plane* is a 2-D ``uint8`` array of shape
``(height, width)`` and an RGB image is ``uint8`` with shape
``(height, width, 3)``.  Widths are written ``M`` and heights ``N``
throughout the package.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

__all__ = [
    "Sampling",
    "YCbCrImage",
    "as_plane",
    "as_rgb",
    "rgb_to_ycbcr",
    "ycbcr_to_rgb",
    "subsample_420",
    "upsample_420",
    "to_444",
    "to_420",
    "psnr",
    "bits_per_pixel",
]

# JFIF / full-range BT.601
_RGB_TO_YCC = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCC_OFFSET = np.array([0.0, 128.0, 128.0])
_CR_R = 1.402
_CB_G = 0.344136
_CR_G = 0.714136
_CB_B = 1.772


class Sampling(str, enum.Enum):
    """Chroma sampling of a YCbCr image or a composite."""

    S444 = "444"
    S420 = "420"

    @classmethod
    def parse(cls, value: "Sampling | str | int") -> "Sampling":
        if isinstance(value, cls):
            return value
        text = str(value).replace(":", "").strip().upper().lstrip("S")
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown chroma sampling {value!r} (expected 444 or 420)")


def as_plane(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2:
        raise GeometryError(f"a plane must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise GeometryError(f"empty plane {a.shape}")
    if a.dtype != np.uint8:
        if a.size and (a.min() < 0 or a.max() > 255):
            raise ValueError("plane samples must lie in [0, 255]")
        a = a.astype(np.uint8)
    return a


def as_rgb(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 3 or a.shape[2] != 3:
        raise GeometryError(f"an RGB image must have shape (N, M, 3), got {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise GeometryError(f"empty image {a.shape}")
    if a.dtype != np.uint8:
        a = a.astype(np.uint8)
    return a


@dataclass(frozen=True)
class YCbCrImage:
    """Luma plus two chroma planes, either full-size or 4:2:0 sub-sampled."""

    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray
    sampling: Sampling = Sampling.S444

    def __post_init__(self):
        object.__setattr__(self, "y", as_plane(self.y))
        object.__setattr__(self, "cb", as_plane(self.cb))
        object.__setattr__(self, "cr", as_plane(self.cr))
        object.__setattr__(self, "sampling", Sampling.parse(self.sampling))
        h, w = self.y.shape
        if self.sampling is Sampling.S444:
            want = (h, w)
        else:
            want = ((h + 1) // 2, (w + 1) // 2)
        for name in ("cb", "cr"):
            got = getattr(self, name).shape
            if got != want:
                raise GeometryError(
                    f"{name} plane is {got}, expected {want} for {self.sampling.value} sampling"
                )

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]

    def planes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.y, self.cb, self.cr

    def __eq__(self, other):
        if not isinstance(other, YCbCrImage):
            return NotImplemented
        return self.sampling is other.sampling and all(
            np.array_equal(a, b) for a, b in zip(self.planes(), other.planes())
        )

    __hash__ = None


def _round_clamp(x: np.ndarray) -> np.ndarray:
    # round half up, then clamp
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def rgb_to_ycbcr(img) -> YCbCrImage:
    """Full-range BT.601 conversion (the JFIF convention) to a 4:4:4 image."""
    rgb = as_rgb(img).astype(np.float64)
    ycc = rgb @ _RGB_TO_YCC.T + _YCC_OFFSET
    ycc = _round_clamp(ycc)
    return YCbCrImage(ycc[..., 0], ycc[..., 1], ycc[..., 2], Sampling.S444)


def ycbcr_to_rgb(img: YCbCrImage) -> np.ndarray:
    """Inverse of :func:`rgb_to_ycbcr`.  Only accepts 4:4:4 input."""
    if img.sampling is not Sampling.S444:
        raise GeometryError("ycbcr_to_rgb needs 4:4:4 input; upsample the chroma first")
    y = img.y.astype(np.float64)
    cb = img.cb.astype(np.float64) - 128.0
    cr = img.cr.astype(np.float64) - 128.0
    r = y + _CR_R * cr
    g = y - _CB_G * cb - _CR_G * cr
    b = y + _CB_B * cb
    return _round_clamp(np.stack([r, g, b], axis=-1))


def subsample_420(chroma) -> np.ndarray:
    """Halve a chroma plane in both directions with a 2x2 box filter.

    Odd widths or heights are handled by replicating the last column/row.
    Each output is ``(a + b + c + d + 2) // 4``, i.e. the box mean rounded
    half up.
    """
    p = as_plane(chroma)
    h, w = p.shape
    p = np.pad(p, ((0, h % 2), (0, w % 2)), mode="edge").astype(np.uint16)
    s = p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2]
    return ((s + 2) // 4).astype(np.uint8)


def upsample_420(chroma, target_w: int, target_h: int) -> np.ndarray:
    """Nearest-neighbour 2x replication back to ``target_h x target_w``."""
    p = as_plane(chroma)
    want = ((target_h + 1) // 2, (target_w + 1) // 2)
    if p.shape != want:
        raise GeometryError(
            f"chroma plane {p.shape} does not match target {target_h}x{target_w} (expected {want})"
        )
    return np.repeat(np.repeat(p, 2, axis=0), 2, axis=1)[:target_h, :target_w]


def to_444(img: YCbCrImage) -> YCbCrImage:
    if img.sampling is Sampling.S444:
        return img
    w, h = img.width, img.height
    return YCbCrImage(
        img.y, upsample_420(img.cb, w, h), upsample_420(img.cr, w, h), Sampling.S444
    )


def to_420(img: YCbCrImage) -> YCbCrImage:
    if img.sampling is Sampling.S420:
        return img
    return YCbCrImage(img.y, subsample_420(img.cb), subsample_420(img.cr), Sampling.S420)


def psnr(a, b) -> float:
    """PSNR in dB for 8-bit data, MSE pooled over every sample and channel.

    Returns ``inf`` for identical inputs.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise GeometryError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise GeometryError("cannot compute PSNR of empty images")
    diff = a.astype(np.float64) - b.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def bits_per_pixel(file_bytes: int, width: int, height: int) -> float:
    """Rate of a compressed file, normalised by the original image size."""
    if width < 1 or height < 1:
        raise GeometryError(f"image dimensions must be positive, got {width}x{height}")
    if file_bytes < 0:
        raise ValueError("file size cannot be negative")
    return 8.0 * file_bytes / (width * height)
