"""Deterministic synthetic fixtures: text-like pages and smooth light fields.

Everything here is seeded and pure so tests can regenerate identical inputs.
Values that must survive exact float arithmetic are drawn from the 1/256
grid (`dyadic_*`): products of two such values are exactly representable in
float64, which keeps multiply-then-divide identities bit-exact.
"""

from __future__ import annotations

import numpy as np

from docenhance.enhance import IlluminationSurface
from docenhance.imaging import Image


def dyadic_image(height, width, channels=3, rng=None, lo=0.0, hi=1.0):
    """Random Image whose values all sit on the 1/256 grid inside [lo, hi]."""
    rng = rng if rng is not None else np.random.default_rng(0)
    klo = int(round(lo * 256))
    khi = int(round(hi * 256))
    k = rng.integers(klo, khi + 1, size=(height, width, channels))
    return Image(k / 256.0)


def dyadic_surface(height, width, channels=1, rng=None, lo=0.5, hi=1.0):
    """Random IlluminationSurface on the 1/256 grid inside [lo, hi]."""
    rng = rng if rng is not None else np.random.default_rng(0)
    klo = int(round(lo * 256))
    khi = int(round(hi * 256))
    k = rng.integers(klo, khi + 1, size=(height, width, channels))
    return IlluminationSurface(k / 256.0)


def text_page(height, width, channels=3, seed=0, x_limit=None):
    """White page covered in 2-px-tall dark strokes laid out like text lines.

    ``x_limit`` confines all strokes to columns < x_limit (for tests that
    need content only in part of the page). Ink shades are sixteenths so the
    values stay exactly representable.
    """
    rng = np.random.default_rng(seed)
    page = np.ones((height, width, channels), dtype=np.float64)
    right = width if x_limit is None else min(x_limit, width)
    y = int(rng.integers(6, 14))
    while y < height - 8:
        x = int(rng.integers(4, 12))
        while x < right - 10:
            word = int(rng.integers(6, 22))
            end = min(x + word, right - 2)
            shade = float(rng.integers(0, 4)) / 16.0
            page[y : y + 2, x:end, :] = shade
            x = end + int(rng.integers(4, 10))
        y += int(rng.integers(8, 14))
    return Image(page)


def smooth_surface(height, width, channels=1, seed=0, lo=0.5, hi=1.0):
    """Slowly varying light field in [lo, hi] built from three sine sheets."""
    rng = np.random.default_rng(seed)
    ys = np.linspace(0.0, 1.0, height)[:, np.newaxis]
    xs = np.linspace(0.0, 1.0, width)[np.newaxis, :]
    freq = rng.uniform(0.6, 1.4, size=3)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=3)
    field = (
        np.sin(freq[0] * np.pi * xs + phase[0])
        + np.sin(freq[1] * np.pi * ys + phase[1])
        + np.sin(freq[2] * np.pi * (xs + ys) + phase[2])
    )
    span = field.max() - field.min()
    field = (field - field.min()) / (span if span > 0 else 1.0)
    field = lo + (hi - lo) * field
    return IlluminationSurface(np.repeat(field[:, :, np.newaxis], channels, axis=2))


def ramp_page(height, width, channels=1, lo=0.5, hi=1.0, axis=1):
    """Linear gradient from lo to hi along ``axis`` (1 = left-to-right)."""
    if axis == 1:
        line = np.linspace(lo, hi, width)
        plane = np.broadcast_to(line[np.newaxis, :], (height, width))
    else:
        line = np.linspace(lo, hi, height)
        plane = np.broadcast_to(line[:, np.newaxis], (height, width))
    return Image(np.repeat(plane[:, :, np.newaxis], channels, axis=2).copy())


def checkerboard(size, channels=1):
    """size x size board of alternating 0/1 pixels."""
    ys, xs = np.indices((size, size))
    plane = ((ys + xs) % 2).astype(np.float64)
    return Image(np.repeat(plane[:, :, np.newaxis], channels, axis=2))


def impulse_page(size, channels=1):
    """All-black page with a single full-intensity pixel at the center."""
    plane = np.zeros((size, size), dtype=np.float64)
    plane[size // 2, size // 2] = 1.0
    return Image(np.repeat(plane[:, :, np.newaxis], channels, axis=2))


def uniform_page(height, width, value, channels=3):
    return Image(np.full((height, width, channels), value, dtype=np.float64))
