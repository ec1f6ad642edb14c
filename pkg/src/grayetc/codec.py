"""JPEG round trips, social-network recompression emulation and R-D sweeps.

Baseline sequential JPEG comes from Pillow's libjpeg binding.  Every encode
passes explicit quantization tables: the base table (Annex K luma/chroma, or
a custom table such as a G-table) scaled for the quality factor exactly as
IJG ``cjpeg -quality Q -qtables ...`` does (see :func:`gtable.scale_table`).
Optimised Huffman tables and progressive mode are off so output bytes are
a pure function of samples and configuration.
"""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from PIL import Image

from . import cipher
from .composite import Composite, assemble, disassemble
from .errors import CodecError, FormatError, GeometryError, GrayEtcError
from .gtable import STD_CHROMA, STD_LUMA, QuantTable, scale_table
from .keystream import KeySet
from .pixelcore import (
    Sampling,
    as_rgb,
    bits_per_pixel,
    psnr,
    rgb_to_ycbcr,
    to_444,
    ycbcr_to_rgb,
)

__all__ = [
    "GRAY",
    "PIPELINES",
    "JpegConfig",
    "SnsRule",
    "SnsProfile",
    "RdPoint",
    "SweepError",
    "encode_jpeg",
    "decode_jpeg",
    "jpeg_roundtrip",
    "jpeg_info",
    "estimate_quality",
    "load_profile",
    "builtin_profiles",
    "sns_emulate",
    "evaluate",
    "rd_sweep",
    "rd_csv",
    "parse_quality_range",
    "interpolate_psnr",
]

GRAY = "gray"
PIPELINES = ("none", "composite", "proposed", "color_baseline")
_SUBSAMPLING = {Sampling.S444.value: 0, Sampling.S420.value: 2}


def _parse_sampling(value) -> str:
    if str(value).lower() in (GRAY, "grey", "grayscale", "l"):
        return GRAY
    return Sampling.parse(value).value


@dataclass(frozen=True)
class JpegConfig:
    """Quality factor, chroma sampling (``"444"``, ``"420"`` or ``"gray"``),
    and an optional base luma table used in place of the Annex K one."""

    quality: int
    sampling: str = GRAY
    quant_override: QuantTable | None = None

    def __post_init__(self):
        if not 1 <= int(self.quality) <= 100:
            raise ValueError(f"quality must be in [1, 100], got {self.quality}")
        object.__setattr__(self, "quality", int(self.quality))
        object.__setattr__(self, "sampling", _parse_sampling(self.sampling))

    def tables(self) -> list[list[int]]:
        luma = self.quant_override if self.quant_override is not None else STD_LUMA
        out = [scale_table(luma, self.quality).as_list()]
        if self.sampling != GRAY:
            out.append(scale_table(STD_CHROMA, self.quality).as_list())
        return out


def encode_jpeg(img, cfg: JpegConfig) -> bytes:
    a = np.asarray(img)
    if cfg.sampling == GRAY:
        if a.ndim != 2:
            raise GeometryError(f"grayscale encode needs a plane, got shape {a.shape}")
        pil = Image.fromarray(a.astype(np.uint8, copy=False), mode="L")
        kwargs: dict[str, Any] = {}
    else:
        pil = Image.fromarray(as_rgb(a), mode="RGB")
        kwargs = {"subsampling": _SUBSAMPLING[cfg.sampling]}
    buf = io.BytesIO()
    try:
        pil.save(buf, "JPEG", qtables=cfg.tables(), optimize=False, progressive=False, **kwargs)
    except (OSError, ValueError) as e:
        raise CodecError(f"JPEG encode failed (quality={cfg.quality}, sampling={cfg.sampling}): {e}") from e
    return buf.getvalue()


def _open(data: bytes) -> Image.Image:
    try:
        im = Image.open(io.BytesIO(data))
        im.load()
    except Exception as e:  # Pillow raises a zoo of types on corrupt data
        raise CodecError(f"cannot decode JPEG data: {e}") from e
    if im.format != "JPEG":
        raise CodecError(f"expected JPEG data, got {im.format}")
    return im


def decode_jpeg(data: bytes) -> np.ndarray:
    """Decode to a plane (grayscale JPEG) or an RGB array."""
    im = _open(data)
    if im.mode == "L":
        return np.asarray(im, dtype=np.uint8).copy()
    return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def jpeg_roundtrip(img, cfg: JpegConfig) -> tuple[np.ndarray, int]:
    data = encode_jpeg(img, cfg)
    return decode_jpeg(data), len(data)


@dataclass(frozen=True)
class JpegInfo:
    is_color: bool
    sampling: str
    luma_table: np.ndarray
    quality: int


def _sampling_of(im: Image.Image) -> str:
    if im.mode == "L":
        return GRAY
    layers = getattr(im, "layer", None) or []
    if layers and layers[0][1:3] == (2, 2):
        return Sampling.S420.value
    if layers and layers[0][1:3] == (1, 1):
        return Sampling.S444.value
    return "other"


def estimate_quality(luma_table) -> int:
    """Quality factor whose scaled Annex K luma table is closest (L1) to
    ``luma_table``.  Ties go to the higher quality.  For non-standard tables
    this is an approximation, which is all a recompressing service has."""
    t = np.asarray(luma_table, dtype=np.int64).reshape(8, 8)
    best_q, best_err = 1, None
    for q in range(1, 101):
        err = int(np.abs(scale_table(STD_LUMA, q).values - t).sum())
        if best_err is None or err <= best_err:
            best_q, best_err = q, err
    return best_q


def jpeg_info(data: bytes) -> JpegInfo:
    im = _open(data)
    qt = getattr(im, "quantization", None) or {}
    if 0 not in qt:
        raise CodecError("JPEG has no luma quantization table")
    luma = np.array(list(qt[0]), dtype=np.int64).reshape(8, 8)
    return JpegInfo(im.mode != "L", _sampling_of(im), luma, estimate_quality(luma))


@dataclass(frozen=True)
class SnsRule:
    """What a service does to one class of upload (color or grayscale).

    The upload is re-encoded when ``trigger_min_quality`` is ``None`` or the
    estimated upload quality is at least that value; otherwise the bytes pass
    through untouched.
    """

    target_quality: int
    target_sampling: str
    trigger_min_quality: int | None = None
    quality_range: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "target_sampling", _parse_sampling(self.target_sampling))
        if self.quality_range is not None:
            lo, hi = (int(v) for v in self.quality_range)
            object.__setattr__(self, "quality_range", (lo, hi))
            if not lo <= self.target_quality <= hi:
                raise FormatError("target_quality lies outside quality_range")

    def triggers(self, upload_quality: int) -> bool:
        return self.trigger_min_quality is None or upload_quality >= self.trigger_min_quality

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SnsRule":
        qr = d.get("quality_range")
        return cls(
            target_quality=int(d["target_quality"]),
            target_sampling=d["target_sampling"],
            trigger_min_quality=None if d.get("trigger_min_quality") is None else int(d["trigger_min_quality"]),
            quality_range=None if qr is None else (int(qr[0]), int(qr[1])),
        )


@dataclass(frozen=True)
class SnsProfile:
    name: str
    color: SnsRule | None
    gray: SnsRule | None
    source: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SnsProfile":
        try:
            if d.get("format_version") != 1:
                raise FormatError(f"unsupported profile format_version {d.get('format_version')}")
            return cls(
                name=str(d["name"]),
                color=None if d.get("color") is None else SnsRule.from_dict(d["color"]),
                gray=None if d.get("gray") is None else SnsRule.from_dict(d["gray"]),
                source=dict(d),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, FormatError):
                raise
            raise FormatError(f"invalid SNS profile: {e}") from e


def builtin_profiles() -> list[str]:
    files = resources.files("grayetc").joinpath("profiles")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_profile(name_or_path: str | os.PathLike) -> SnsProfile:
    """Load a builtin profile by name (``twitter``, ``facebook``) or a JSON file."""
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        text = p.read_text()
    else:
        res = resources.files("grayetc").joinpath("profiles", f"{name_or_path}.json")
        if not res.is_file():
            raise FormatError(f"unknown SNS profile {name_or_path!r}; builtin: {builtin_profiles()}")
        text = res.read_text()
    try:
        return SnsProfile.from_dict(json.loads(text))
    except json.JSONDecodeError as e:
        raise FormatError(f"SNS profile is not valid JSON: {e}") from e


def sns_emulate(data: bytes, profile: SnsProfile, color_quality: int | None = None) -> bytes:
    """Apply a service's recompression policy to uploaded JPEG bytes.

    ``color_quality`` overrides the color re-encode quality and must stay
    within the rule's ``quality_range`` when it has one.
    """
    info = jpeg_info(data)
    rule = profile.color if info.is_color else profile.gray
    if rule is None or not rule.triggers(info.quality):
        return data
    quality = rule.target_quality
    if color_quality is not None and info.is_color:
        if rule.quality_range is not None and not rule.quality_range[0] <= color_quality <= rule.quality_range[1]:
            raise ValueError(
                f"{profile.name} re-encodes color uploads at quality {rule.quality_range}, got {color_quality}"
            )
        quality = color_quality
    pixels = decode_jpeg(data)
    sampling = rule.target_sampling if info.is_color else GRAY
    return encode_jpeg(pixels, JpegConfig(quality, sampling))


@dataclass(frozen=True)
class RdPoint:
    config: str
    quality: int
    mean_bpp: float
    mean_psnr_db: float
    n_images: int


class SweepError(GrayEtcError):
    """One image of a sweep failed; ``image`` names it, ``__cause__`` says why."""

    def __init__(self, image: str, quality: int, cause: BaseException):
        super().__init__(f"image {image!r} at Qf={quality}: {cause}")
        self.image = image
        self.quality = quality


@dataclass(frozen=True)
class _Setup:
    pipeline: str
    sampling: str
    block: int
    keys: KeySet | None
    gtable: QuantTable | None
    sns: SnsProfile | None
    sns_quality: int | None


def _transmit(pixels, cfg: JpegConfig, setup: _Setup) -> bytes:
    data = encode_jpeg(pixels, cfg)
    if setup.sns is not None:
        data = sns_emulate(data, setup.sns, setup.sns_quality)
    return data


def _evaluate(rgb: np.ndarray, quality: int, s: _Setup) -> tuple[float, float]:
    h, w = rgb.shape[:2]
    if s.pipeline == "none":
        data = _transmit(rgb, JpegConfig(quality, s.sampling), s)
        out = decode_jpeg(data)
        if out.ndim == 2:
            out = np.repeat(out[..., None], 3, axis=2)
    elif s.pipeline == "color_baseline":
        enc = cipher.encrypt_color_baseline(rgb, s.keys, s.block)
        data = _transmit(enc, JpegConfig(quality, s.sampling), s)
        out = cipher.decrypt_color_baseline(decode_jpeg(data), s.keys, s.block)
    else:
        comp = assemble(rgb_to_ycbcr(rgb), s.sampling)
        if s.pipeline == "proposed":
            comp = cipher.encrypt(comp, s.keys, s.block)
        data = _transmit(comp.plane, JpegConfig(quality, GRAY, s.gtable), s)
        received = Composite(decode_jpeg(data), comp.layout, comp.cipher)
        if s.pipeline == "proposed":
            received = cipher.decrypt(received, s.keys)
        out = ycbcr_to_rgb(to_444(disassemble(received)))
    return bits_per_pixel(len(data), w, h), psnr(rgb, out)


def evaluate(
    rgb,
    quality: int,
    pipeline: str = "proposed",
    sampling="420",
    *,
    block: int = 8,
    keys: KeySet | None = None,
    gtable: QuantTable | None = None,
    sns: SnsProfile | None = None,
    sns_quality: int | None = None,
) -> tuple[float, float]:
    """bpp of the final file and RGB PSNR against ``rgb`` for one image."""
    return _evaluate(as_rgb(rgb), quality, _make_setup(pipeline, sampling, block, keys, gtable, sns, sns_quality))


def _make_setup(pipeline, sampling, block, keys, gtable, sns, sns_quality) -> _Setup:
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}; choose from {PIPELINES}")
    sampling = Sampling.parse(sampling).value
    if pipeline in ("proposed", "color_baseline") and keys is None:
        raise ValueError(f"pipeline {pipeline!r} needs keys")
    return _Setup(pipeline, sampling, block, keys, gtable, sns, sns_quality)


def _job(args) -> tuple[float, float]:
    rgb, quality, setup, name = args
    try:
        return _evaluate(rgb, quality, setup)
    except Exception as e:
        raise SweepError(name, quality, e) from e


def _label(s: _Setup) -> str:
    parts = [s.pipeline, s.sampling]
    if s.pipeline in ("proposed", "color_baseline"):
        parts.append(f"B{s.block}")
    if s.pipeline in ("proposed", "composite") and s.gtable is not None:
        parts.append("gtable")
    if s.sns is not None:
        parts.append(s.sns.name if s.sns_quality is None else f"{s.sns.name}{s.sns_quality}")
    return "-".join(parts)


def rd_sweep(
    images: Sequence,
    pipeline: str,
    qualities: Sequence[int],
    sampling="420",
    *,
    block: int = 8,
    keys: KeySet | None = None,
    gtable: QuantTable | None = None,
    sns: SnsProfile | None = None,
    sns_quality: int | None = None,
    names: Sequence[str] | None = None,
    label: str | None = None,
    jobs: int = 1,
) -> list[RdPoint]:
    """Mean bpp and mean PSNR per quality factor over an image set.

    Means are ``math.fsum`` over images in input order, so the result does
    not depend on ``jobs``.  A failing image aborts the sweep with
    :class:`SweepError`.
    """
    images = [as_rgb(im) for im in images]
    if not images:
        raise ValueError("rd_sweep needs at least one image")
    names = [f"#{i}" for i in range(len(images))] if names is None else list(names)
    if len(names) != len(images):
        raise ValueError("names and images differ in length")
    setup = _make_setup(pipeline, sampling, block, keys, gtable, sns, sns_quality)
    qualities = [int(q) for q in qualities]
    tasks = [(im, q, setup, name) for q in qualities for im, name in zip(images, names)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_job(t) for t in tasks]
    label = _label(setup) if label is None else label
    n = len(images)
    points = []
    for k, q in enumerate(qualities):
        chunk = results[k * n : (k + 1) * n]
        points.append(
            RdPoint(
                label,
                q,
                math.fsum(r[0] for r in chunk) / n,
                math.fsum(r[1] for r in chunk) / n,
                n,
            )
        )
    return points


RD_HEADER = "config,Qf,mean_bpp,mean_psnr_db,n_images"


def rd_csv(points: Sequence[RdPoint]) -> str:
    lines = [RD_HEADER]
    for p in points:
        lines.append(f"{p.config},{p.quality},{p.mean_bpp:.6f},{p.mean_psnr_db:.6f},{p.n_images}")
    return "\n".join(lines) + "\n"


def parse_quality_range(text: str) -> list[int]:
    """``"70:100:5"`` -> 70, 75, ..., 100 (inclusive); ``"80,90"`` and ``"85"`` also work."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError
            out = list(range(start, stop + 1, step))
        else:
            out = [int(p) for p in text.split(",")]
    except ValueError:
        raise ValueError(f"bad quality range {text!r}; use start:stop:step or a comma list") from None
    for q in out:
        if not 1 <= q <= 100:
            raise ValueError(f"quality {q} outside [1, 100]")
    return out


def interpolate_psnr(points: Sequence[RdPoint], bpp: float) -> float:
    """Linear interpolation of a curve's PSNR at ``bpp``; NaN outside its range."""
    pts = sorted(points, key=lambda p: p.mean_bpp)
    x = [p.mean_bpp for p in pts]
    y = [p.mean_psnr_db for p in pts]
    if not x[0] <= bpp <= x[-1]:
        return math.nan
    return float(np.interp(bpp, x, y))
