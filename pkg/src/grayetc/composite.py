"""Assembly of the single-channel composite from luma and chroma planes.

Canonical layout
----------------
4:2:0
    luma on top, the two quarter-size chroma planes side by side below it::

        +-----------+
        |     Y     |
        +-----+-----+
        | Cb' | Cr' |
        +-----+-----+

4:4:4
    the three full-size planes stacked vertically (Y, Cb, Cr).  Placing two
    full-size chroma planes side by side would double the composite width
    and leave an M x N hole next to the luma.

Every region is edge-padded on its own so that all region boundaries fall
on multiples of :data:`ALIGN` (16).  Any block size of 8 or 16 therefore
never straddles two components.  The regions tile the whole composite.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import netpbm
from .errors import FormatError, GeometryError
from .pixelcore import Sampling, YCbCrImage, as_plane, to_420

__all__ = [
    "ALIGN",
    "FORMAT_VERSION",
    "Region",
    "Layout",
    "Composite",
    "plan_layout",
    "assemble",
    "disassemble",
    "sidecar_path",
    "save_composite",
    "load_composite",
]

ALIGN = 16
FORMAT_VERSION = 1
_REGION_NAMES = ("y", "cb", "cr")


def _align(v: int) -> int:
    return -(-v // ALIGN) * ALIGN


@dataclass(frozen=True)
class Region:
    """A component placed at ``(x, y)``; the padded rectangle is what it owns."""

    x: int
    y: int
    width: int
    height: int
    padded_width: int
    padded_height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise GeometryError(f"empty region {self}")
        if self.padded_width < self.width or self.padded_height < self.height:
            raise GeometryError(f"padding smaller than content in {self}")
        if min(self.x, self.y) < 0:
            raise GeometryError(f"negative region origin in {self}")

    @property
    def padding(self) -> tuple[int, int]:
        """Replicated columns (right) and rows (bottom)."""
        return self.padded_width - self.width, self.padded_height - self.height

    def padded_slice(self) -> tuple[slice, slice]:
        return (
            slice(self.y, self.y + self.padded_height),
            slice(self.x, self.x + self.padded_width),
        )

    def content_slice(self) -> tuple[slice, slice]:
        return slice(self.y, self.y + self.height), slice(self.x, self.x + self.width)

    def to_dict(self) -> dict[str, int]:
        return {
            "x": self.x,
            "y": self.y,
            "width": self.width,
            "height": self.height,
            "padded_width": self.padded_width,
            "padded_height": self.padded_height,
        }


@dataclass(frozen=True)
class Layout:
    mode: Sampling
    width: int
    height: int
    plane_width: int
    plane_height: int
    y: Region
    cb: Region
    cr: Region

    def __post_init__(self):
        object.__setattr__(self, "mode", Sampling.parse(self.mode))
        self._validate()

    def regions(self) -> dict[str, Region]:
        return {"y": self.y, "cb": self.cb, "cr": self.cr}

    @property
    def active_pixels(self) -> int:
        return sum(r.width * r.height for r in self.regions().values())

    @property
    def padding_pixels(self) -> int:
        return self.plane_width * self.plane_height - self.active_pixels

    def _validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise GeometryError(f"invalid image size {self.width}x{self.height}")
        if self.y.width != self.width or self.y.height != self.height:
            raise GeometryError("luma region does not match the image size")
        if self.mode is Sampling.S420:
            cw, ch = (self.width + 1) // 2, (self.height + 1) // 2
        else:
            cw, ch = self.width, self.height
        for r in (self.cb, self.cr):
            if (r.width, r.height) != (cw, ch):
                raise GeometryError(
                    f"chroma region {r.width}x{r.height} inconsistent with "
                    f"{self.mode.value} sampling of {self.width}x{self.height}"
                )
        cover = np.zeros((self.plane_height, self.plane_width), dtype=np.int8)
        for r in self.regions().values():
            rows, cols = r.padded_slice()
            if rows.stop > self.plane_height or cols.stop > self.plane_width:
                raise GeometryError(f"region {r} exceeds the composite plane")
            for v in (r.x, r.y, r.x + r.padded_width, r.y + r.padded_height):
                if v % ALIGN:
                    raise GeometryError(f"region {r} is not aligned to {ALIGN}")
            cover[rows, cols] += 1
        if not np.all(cover == 1):
            raise GeometryError("regions must be disjoint and tile the composite")

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "mode": self.mode.value,
            "width": self.width,
            "height": self.height,
            "plane_width": self.plane_width,
            "plane_height": self.plane_height,
            "regions": {k: r.to_dict() for k, r in self.regions().items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Layout":
        try:
            version = d["format_version"]
            if version != FORMAT_VERSION:
                raise FormatError(f"unsupported composite format_version {version}")
            regions = {k: Region(**{f: int(v) for f, v in d["regions"][k].items()}) for k in _REGION_NAMES}
            return cls(
                mode=Sampling.parse(d["mode"]),
                width=int(d["width"]),
                height=int(d["height"]),
                plane_width=int(d["plane_width"]),
                plane_height=int(d["plane_height"]),
                **regions,
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, FormatError):
                raise
            raise FormatError(f"invalid composite layout: {e}") from e


def plan_layout(width: int, height: int, mode: Sampling | str) -> Layout:
    """Compute the canonical layout for an ``width x height`` color image."""
    mode = Sampling.parse(mode)
    if width < 1 or height < 1:
        raise GeometryError(f"invalid image size {width}x{height}")
    py, ph = _align(width), _align(height)
    if mode is Sampling.S444:
        y = Region(0, 0, width, height, py, ph)
        cb = Region(0, ph, width, height, py, ph)
        cr = Region(0, 2 * ph, width, height, py, ph)
        return Layout(mode, width, height, py, 3 * ph, y, cb, cr)
    cw, ch = (width + 1) // 2, (height + 1) // 2
    pcw, pch = _align(cw), _align(ch)
    plane_w = max(py, 2 * pcw)
    y = Region(0, 0, width, height, plane_w, ph)
    cb = Region(0, ph, cw, ch, pcw, pch)
    cr = Region(pcw, ph, cw, ch, plane_w - pcw, pch)
    return Layout(mode, width, height, plane_w, ph + pch, y, cb, cr)


@dataclass(frozen=True)
class Composite:
    """The grayscale-based image plus everything needed to take it apart.

    ``cipher`` is ``None`` for a plaintext composite; after encryption it
    holds the (key-free) parameters needed to decrypt.
    """

    plane: np.ndarray
    layout: Layout
    cipher: Mapping[str, Any] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "plane", as_plane(self.plane))
        want = (self.layout.plane_height, self.layout.plane_width)
        if self.plane.shape != want:
            raise GeometryError(
                f"composite plane is {self.plane.shape}, layout expects {want}"
            )

    @property
    def mode(self) -> Sampling:
        return self.layout.mode

    def replace(self, plane=None, cipher=...) -> "Composite":
        return Composite(
            self.plane if plane is None else plane,
            self.layout,
            self.cipher if cipher is ... else cipher,
        )

    def metadata(self) -> dict[str, Any]:
        d = self.layout.to_dict()
        d["cipher"] = None if self.cipher is None else dict(self.cipher)
        return d

    def __eq__(self, other):
        if not isinstance(other, Composite):
            return NotImplemented
        return (
            self.layout == other.layout
            and self.cipher == other.cipher
            and np.array_equal(self.plane, other.plane)
        )

    __hash__ = None


def assemble(img: YCbCrImage, mode: Sampling | str | None = None) -> Composite:
    """Build the composite.

    With ``mode="420"`` a 4:4:4 input is chroma sub-sampled first.  A
    4:2:0 input cannot be assembled in 4:4:4 mode.
    """
    mode = img.sampling if mode is None else Sampling.parse(mode)
    if mode is Sampling.S420:
        img = to_420(img)
    elif img.sampling is not Sampling.S444:
        raise GeometryError("cannot build a 4:4:4 composite from 4:2:0 chroma")
    layout = plan_layout(img.width, img.height, mode)
    plane = np.empty((layout.plane_height, layout.plane_width), dtype=np.uint8)
    for name, src in zip(_REGION_NAMES, img.planes()):
        r = layout.regions()[name]
        pad_w, pad_h = r.padding
        plane[r.padded_slice()] = np.pad(src, ((0, pad_h), (0, pad_w)), mode="edge")
    return Composite(plane, layout)


def disassemble(c: Composite) -> YCbCrImage:
    """Strip padding and return the component planes (exact inverse of assemble)."""
    regions = c.layout.regions()
    planes = [c.plane[regions[name].content_slice()].copy() for name in _REGION_NAMES]
    return YCbCrImage(*planes, sampling=c.layout.mode)


def sidecar_path(image_path: str | os.PathLike) -> Path:
    return Path(image_path).with_suffix(".json")


def dump_metadata(meta: Mapping[str, Any]) -> str:
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def save_composite(path: str | os.PathLike, c: Composite, meta_path=None) -> tuple[Path, Path]:
    """Write the plane as PGM and the layout as a JSON sidecar."""
    path = Path(path)
    meta_path = sidecar_path(path) if meta_path is None else Path(meta_path)
    netpbm.write_netpbm(path, c.plane)
    meta_path.write_text(dump_metadata(c.metadata()))
    return path, meta_path


def parse_metadata(text: str) -> tuple[Layout, Mapping[str, Any] | None]:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"sidecar is not valid JSON: {e}") from e
    if not isinstance(d, dict):
        raise FormatError("sidecar must be a JSON object")
    return Layout.from_dict(d), d.get("cipher")


def load_composite(path: str | os.PathLike, meta_path=None, plane=None) -> Composite:
    """Read a composite back.  ``plane`` overrides the image data, e.g. with a
    decoded JPEG of the same composite."""
    path = Path(path)
    meta_path = sidecar_path(path) if meta_path is None else Path(meta_path)
    if not meta_path.exists():
        raise FormatError(f"missing composite sidecar {meta_path}")
    layout, cipher = parse_metadata(meta_path.read_text())
    if plane is None:
        plane = netpbm.read_netpbm(path)
    if np.asarray(plane).ndim != 2:
        raise FormatError(f"{path} is not a single-channel image")
    return Composite(plane, layout, cipher)
