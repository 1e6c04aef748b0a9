"""Core raster types, color handling, and PNG/PPM I/O.

All pixel data in this package lives in normalized ``float64``: values in
``[0, 1]``, shape ``(height, width, channels)`` with 1 or 3 channels,
C-contiguous and marked read-only. Loading an 8-bit file maps sample ``v``
to ``v / 255``; saving rounds half away from zero (``floor(v * 255 + 0.5)``)
so the 0.5 code point lands on 128.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage
from PIL import UnidentifiedImageError

from . import _kernels

#: Rec. 601 luminance weights for (R, G, B).
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_LOADABLE_FORMATS = ("PNG", "PPM")
_GRAY_MODES = ("1", "L", "LA")
_COLOR_MODES = ("RGB", "RGBA", "P")


class ImagingError(Exception):
    """Base class for raster I/O and geometry failures."""


class MissingFileError(ImagingError):
    """The path does not exist or is not a regular file."""


class UnsupportedFormatError(ImagingError):
    """The file is a raster format or pixel layout this package does not read."""


class CorruptStreamError(ImagingError):
    """The file exists but cannot be decoded as an image."""


class WriteError(ImagingError):
    """The destination path could not be written."""


class ShapeMismatchError(ImagingError):
    """Two rasters that must share dimensions do not."""


class RegionError(ImagingError):
    """A crop region does not fit inside the image."""


def _validate_pixels(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise ValueError("pixel data must be 2-D or 3-D, got shape %r" % (arr.shape,))
    h, w, c = arr.shape
    if h < 1 or w < 1:
        raise ValueError("image dimensions must be positive, got %dx%d" % (w, h))
    if c not in (1, 3):
        raise ValueError("channel count must be 1 or 3, got %d" % c)
    if not np.all(np.isfinite(arr)):
        raise ValueError("pixel data contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(
            "pixel values must lie in [0, 1], got range [%g, %g]"
            % (arr.min(), arr.max())
        )
    arr = arr.copy()  # never freeze an array the caller still holds
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Image:
    """Normalized raster: float64 in [0, 1], shape (height, width, channels)."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _validate_pixels(self.data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @staticmethod
    def from_array(arr) -> "Image":
        """Wrap a (h, w) or (h, w, c) array, validating the invariants."""
        return Image(np.asarray(arr))


@dataclass(frozen=True, eq=False)
class Plane:
    """Single-channel raster: float64 in [0, 1], shape (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("plane data must be 2-D, got shape %r" % (arr.shape,))
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("plane dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("plane contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("plane values must lie in [0, 1]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Region:
    """Square crop window: top-left corner (x, y) and side length."""

    x: int
    y: int
    size: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError("region corner must be non-negative, got (%d, %d)" % (self.x, self.y))
        if self.size < 1:
            raise ValueError("region size must be positive, got %d" % self.size)


def load_image(path) -> Image:
    """Read a PNG or PPM/PGM file into a normalized Image.

    Grayscale modes decode to one channel; RGB to three. An alpha channel
    is discarded; palette images are expanded to RGB. 16-bit and float
    rasters are rejected as unsupported.
    """
    p = Path(path)
    if not p.is_file():
        raise MissingFileError("no such image file: %s" % p)
    try:
        pil = _PILImage.open(p)
    except UnidentifiedImageError as exc:
        raise CorruptStreamError("cannot decode %s: %s" % (p, exc)) from exc
    with pil:
        if pil.format not in _LOADABLE_FORMATS:
            raise UnsupportedFormatError(
                "unsupported raster format %r for %s (PNG and PPM/PGM are readable)"
                % (pil.format, p)
            )
        if pil.mode in _GRAY_MODES:
            target = "L"
        elif pil.mode in _COLOR_MODES:
            target = "RGB"
        else:
            raise UnsupportedFormatError(
                "unsupported pixel mode %r for %s (8-bit gray or RGB only)"
                % (pil.mode, p)
            )
        try:
            converted = pil.convert(target)
            arr = np.asarray(converted, dtype=np.uint8)
        except OSError as exc:
            raise CorruptStreamError("truncated or corrupt image %s: %s" % (p, exc)) from exc
    return Image(arr / 255.0)


def save_image(image: Image, path) -> None:
    """Write an Image as PNG (.png) or PPM/PGM (.ppm/.pgm/.pnm).

    Quantization rounds half away from zero: ``q = floor(v * 255 + 0.5)``.
    """
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix == ".png":
        fmt = "PNG"
    elif suffix in (".ppm", ".pgm", ".pnm"):
        fmt = "PPM"
    else:
        raise UnsupportedFormatError(
            "unsupported output suffix %r for %s (.png/.ppm/.pgm/.pnm)" % (suffix, p)
        )
    arr = encode_u8(image.data)
    if image.channels == 1:
        pil = _PILImage.fromarray(arr[:, :, 0], mode="L")
    else:
        pil = _PILImage.fromarray(arr, mode="RGB")
    try:
        pil.save(p, format=fmt)
    except (OSError, ValueError) as exc:
        raise WriteError("cannot write %s: %s" % (p, exc)) from exc


def encode_u8(data: np.ndarray) -> np.ndarray:
    """Map normalized floats to uint8 codes, rounding half away from zero."""
    q = np.floor(np.asarray(data, dtype=np.float64) * 255.0 + 0.5)
    return np.clip(q, 0.0, 255.0).astype(np.uint8)


def to_luminance(image: Image) -> Plane:
    """Rec. 601 luminance of an Image; grayscale passes through.

    The weighted sum is associated as ``(0.299 R + 0.114 B) + 0.587 G`` so
    that pure white maps to exactly 1.0 in float64.
    """
    if image.channels == 1:
        return Plane(image.data[:, :, 0])
    d = image.data
    lum = (d[:, :, 0] * 0.299 + d[:, :, 2] * 0.114) + d[:, :, 1] * 0.587
    return Plane(np.clip(lum, 0.0, 1.0))


def crop(image: Image, region: Region) -> Image:
    """Cut a square sub-image; the region must fit entirely inside."""
    if region.x + region.size > image.width or region.y + region.size > image.height:
        raise RegionError(
            "region (x=%d, y=%d, size=%d) exceeds image %dx%d"
            % (region.x, region.y, region.size, image.width, image.height)
        )
    sub = image.data[region.y : region.y + region.size, region.x : region.x + region.size]
    return Image(sub.copy())


def resample(image: Image, width: int, height: int) -> Image:
    """Bilinear per-channel resample (align-corners) to ``width x height``."""
    if width < 1 or height < 1:
        raise ValueError("target size must be positive, got %dx%d" % (width, height))
    planes = [
        _kernels.resample_bilinear(image.data[:, :, c], height, width)
        for c in range(image.channels)
    ]
    out = np.stack(planes, axis=-1)
    return Image(np.clip(out, 0.0, 1.0))
