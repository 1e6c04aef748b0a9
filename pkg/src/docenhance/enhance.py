"""Classical document enhancement.

A captured page is modeled as content lit by a smooth illumination field:
the camera observation is ``raw = content * light``. Enhancement estimates
the light surface from the raw capture, divides it out, and stretches the
result through a black/white-point tone curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .imaging import Image, ShapeMismatchError

#: Lower clamp for illumination values; keeps the division well-posed.
EPS_L = 0.01


@dataclass(frozen=True, eq=False)
class IlluminationSurface:
    """Smooth per-channel light field: float64 in [EPS_L, 1], shape (h, w, c)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError("surface must be (h, w, 1|3), got shape %r" % (arr.shape,))
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("surface dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("surface contains non-finite values")
        if arr.min() < EPS_L or arr.max() > 1.0:
            raise ValueError(
                "surface values must lie in [%g, 1], got range [%g, %g]"
                % (EPS_L, arr.min(), arr.max())
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

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
    def from_array(arr, clamp: bool = False) -> "IlluminationSurface":
        """Wrap an array as a surface; ``clamp=True`` forces it into range."""
        arr = np.asarray(arr, dtype=np.float64)
        if clamp:
            arr = np.clip(arr, EPS_L, 1.0)
        return IlluminationSurface(arr)


@dataclass(frozen=True)
class ToneParams:
    """Black/white-point stretch with optional gamma."""

    black_point: float = 0.05
    white_point: float = 0.92
    gamma: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.black_point < self.white_point <= 1.0):
            raise ValueError(
                "need 0 <= black_point < white_point <= 1, got (%g, %g)"
                % (self.black_point, self.white_point)
            )
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive, got %g" % self.gamma)


def default_window(width: int, height: int) -> int:
    """Structuring window for illumination estimation: round(min/16), odd, >= 3."""
    m = min(width, height)
    if m < 3:
        raise ValueError("image too small for illumination estimation (%dx%d)" % (width, height))
    win = round(m / 16)
    if win % 2 == 0:
        win += 1
    if win < 3:
        win = 3
    if win > m:
        win = m if m % 2 == 1 else m - 1
    return win


def estimate_illumination(raw: Image, window: int | None = None) -> IlluminationSurface:
    """Estimate the smooth light field behind a raw capture.

    Per channel: grayscale morphological closing (max then min filter over a
    square window) suppresses dark content strokes, then a box blur of the
    same window smooths the surface. The result is clamped to [EPS_L, 1].
    """
    if window is None:
        window = default_window(raw.width, raw.height)
    else:
        if window < 3 or window % 2 == 0:
            raise ValueError("window must be an odd integer >= 3, got %d" % window)
        if window > min(raw.width, raw.height):
            raise ValueError(
                "window %d exceeds image extent %dx%d" % (window, raw.width, raw.height)
            )
    planes = []
    for c in range(raw.channels):
        ch = raw.data[:, :, c]
        closed = _kernels.min_filter(_kernels.max_filter(ch, window), window)
        planes.append(_kernels.box_blur(closed, window))
    surface = np.stack(planes, axis=-1)
    return IlluminationSurface(np.clip(surface, EPS_L, 1.0))


def retinex_divide(raw: Image, surface: IlluminationSurface) -> Image:
    """Divide the light field out of a raw capture: ``content = raw / light``."""
    if (raw.height, raw.width, raw.channels) != (
        surface.height,
        surface.width,
        surface.channels,
    ):
        raise ShapeMismatchError(
            "raw %dx%dx%d vs surface %dx%dx%d"
            % (raw.width, raw.height, raw.channels, surface.width, surface.height, surface.channels)
        )
    return Image(np.clip(raw.data / surface.data, 0.0, 1.0))


def tone_map(image: Image, params: ToneParams | None = None) -> Image:
    """Black/white-point stretch: clamp((v - b) / (w - b), 0, 1) ** gamma."""
    if params is None:
        params = ToneParams()
    t = (image.data - params.black_point) / (params.white_point - params.black_point)
    t = np.clip(t, 0.0, 1.0)
    if params.gamma != 1.0:
        t = np.power(t, params.gamma)
    return Image(t)


def enhance_document(
    raw: Image,
    params: ToneParams | None = None,
    window: int | None = None,
) -> tuple[Image, IlluminationSurface]:
    """Full enhancement: estimate light, divide out, tone-stretch.

    Returns the enhanced image and the estimated surface (the surface makes
    the result reproducible and reusable for data augmentation).
    """
    surface = estimate_illumination(raw, window)
    enhanced = tone_map(retinex_divide(raw, surface), params)
    return enhanced, surface
