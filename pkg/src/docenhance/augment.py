"""Paired-data synthesis: lighting transfer onto clean pages.

Real capture shading is harvested from raw/enhanced page pairs as an
illumination surface, banked, and re-applied to clean pages to build
(input, target) training pairs. Crop selection is gated by a Laplacian
energy threshold so empty page regions are not admitted. Every emitted
pair carries provenance (page, crop window, surface, surface window,
seed) sufficient to regenerate it bit-exactly without the RNG.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .enhance import EPS_L, IlluminationSurface
from .imaging import Image, Region, ShapeMismatchError, crop, load_image, to_luminance

#: Pixels where the enhanced value falls below this are unreliable for
#: surface extraction (near-black content: the ratio raw/enhanced blows up).
EPS_E = 0.05

DEFAULT_CROP_SIZE = 256
DEFAULT_ENERGY_THRESHOLD = 1.0e6

#: Attempts allowed per requested crop before sampling gives up.
_ATTEMPTS_PER_CROP = 50


@dataclass(frozen=True)
class AugmentConfig:
    """Knobs for crop sampling and pair synthesis."""

    crop_size: int = DEFAULT_CROP_SIZE
    crops_per_page: int = 8
    energy_threshold: float = DEFAULT_ENERGY_THRESHOLD
    seed: int = 0

    def __post_init__(self):
        if self.crop_size < 16:
            raise ValueError("crop_size must be >= 16, got %d" % self.crop_size)
        if self.crops_per_page < 1:
            raise ValueError("crops_per_page must be >= 1, got %d" % self.crops_per_page)
        if self.energy_threshold < 0.0:
            raise ValueError("energy_threshold must be >= 0, got %g" % self.energy_threshold)
        if self.seed < 0:
            raise ValueError("seed must be >= 0, got %d" % self.seed)


@dataclass(frozen=True)
class SurfaceBank:
    """Ordered collection of harvested illumination surfaces."""

    surfaces: tuple[IlluminationSurface, ...]
    ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.surfaces) != len(self.ids):
            raise ValueError("surfaces and ids must be parallel")
        if not self.surfaces:
            raise ValueError("surface bank is empty")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("surface ids must be unique")

    def __len__(self) -> int:
        return len(self.surfaces)

    def by_id(self, surface_id: str) -> IlluminationSurface:
        try:
            return self.surfaces[self.ids.index(surface_id)]
        except ValueError:
            raise KeyError("no surface %r in bank" % surface_id) from None


@dataclass(frozen=True)
class CropPair:
    """A gated crop: window, raw cut, clean cut, and the gating energy."""

    region: Region
    raw: Image
    clean: Image
    energy: float


@dataclass(frozen=True)
class Provenance:
    """Everything needed to regenerate one synthesized pair bit-exactly."""

    page_id: str
    region: Region
    surface_id: str
    surface_region: Region
    seed: int

    def to_record(self) -> dict:
        return {
            "page": self.page_id,
            "region": [self.region.x, self.region.y, self.region.size],
            "surface": self.surface_id,
            "surface_region": [
                self.surface_region.x,
                self.surface_region.y,
                self.surface_region.size,
            ],
            "seed": self.seed,
        }

    @staticmethod
    def from_record(rec: dict) -> "Provenance":
        return Provenance(
            page_id=rec["page"],
            region=Region(*rec["region"]),
            surface_id=rec["surface"],
            surface_region=Region(*rec["surface_region"]),
            seed=rec["seed"],
        )


@dataclass(frozen=True)
class AugmentedPair:
    """One training sample: shaded input, clean target, provenance."""

    input: Image
    target: Image
    provenance: Provenance


def laplacian_energy(image: Image) -> float:
    """Content-density score: sum |Laplacian| of the 8-bit-scaled luminance."""
    lum = to_luminance(image)
    return _kernels.laplacian_abs_sum(lum.data * 255.0)


def extract_surface(raw: Image, enhanced: Image) -> IlluminationSurface:
    """Recover the light field relating a raw capture to its enhanced page.

    Per channel the ratio ``raw / max(enhanced, EPS_E)`` is clamped into
    [EPS_L, 1]. Pixels whose enhanced value is below ``EPS_E`` carry no
    reliable lighting signal (ink regions); each is replaced by the nearest
    valid value in its row, ties going left. Rows with no valid pixel fall
    back to full brightness.
    """
    if (raw.height, raw.width, raw.channels) != (
        enhanced.height,
        enhanced.width,
        enhanced.channels,
    ):
        raise ShapeMismatchError(
            "raw %dx%dx%d vs enhanced %dx%dx%d"
            % (raw.width, raw.height, raw.channels,
               enhanced.width, enhanced.height, enhanced.channels)
        )
    out = np.empty_like(raw.data)
    for c in range(raw.channels):
        r = raw.data[:, :, c]
        e = enhanced.data[:, :, c]
        ratio = np.clip(r / np.maximum(e, EPS_E), EPS_L, 1.0)
        out[:, :, c] = _nearest_fill_rows(ratio, e >= EPS_E)
    return IlluminationSurface(out)


def _nearest_fill_rows(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Replace invalid entries with the nearest valid entry in the same row."""
    h, w = values.shape
    cols = np.arange(w)
    left = np.maximum.accumulate(np.where(valid, cols, -1), axis=1)
    right = np.where(valid, cols, w)
    right = np.flip(np.minimum.accumulate(np.flip(right, axis=1), axis=1), axis=1)
    ldist = np.where(left >= 0, cols[np.newaxis, :] - left, 2 * w)
    rdist = np.where(right < w, right - cols[np.newaxis, :], 2 * w)
    li = np.clip(left, 0, w - 1)
    ri = np.clip(right, 0, w - 1)
    rows = np.arange(h)[:, np.newaxis]
    filled = np.where(ldist <= rdist, values[rows, li], values[rows, ri])
    filled[~valid.any(axis=1), :] = 1.0
    return filled


def resample_surface(surface: IlluminationSurface, width: int, height: int) -> IlluminationSurface:
    """Bilinear per-channel resample of a surface (align-corners)."""
    if width < 1 or height < 1:
        raise ValueError("target size must be positive, got %dx%d" % (width, height))
    planes = [
        _kernels.resample_bilinear(surface.data[:, :, c], height, width)
        for c in range(surface.channels)
    ]
    out = np.stack(planes, axis=-1)
    return IlluminationSurface(np.clip(out, EPS_L, 1.0))


def apply_surface(clean: Image, surface: IlluminationSurface) -> Image:
    """Shade a clean page: ``shaded = clean * surface`` elementwise.

    A surface whose spatial size differs is resampled to the page first.
    A single-channel surface broadcasts over a color page; any other
    channel mismatch is an error.
    """
    if (surface.height, surface.width) != (clean.height, clean.width):
        surface = resample_surface(surface, clean.width, clean.height)
    if surface.channels not in (1, clean.channels):
        raise ShapeMismatchError(
            "cannot apply %d-channel surface to %d-channel image"
            % (surface.channels, clean.channels)
        )
    return Image(clean.data * surface.data)


def surface_window(surface: IlluminationSurface, region: Region) -> IlluminationSurface:
    """Cut a square window out of a surface; the window must fit."""
    if region.x + region.size > surface.width or region.y + region.size > surface.height:
        raise ValueError(
            "window (x=%d, y=%d, size=%d) exceeds surface %dx%d"
            % (region.x, region.y, region.size, surface.width, surface.height)
        )
    sub = surface.data[region.y : region.y + region.size, region.x : region.x + region.size]
    return IlluminationSurface(sub)


def sample_crops(raw: Image, clean: Image, config: AugmentConfig) -> list[CropPair]:
    """Draw gated square crops from an aligned raw/clean page pair.

    Windows are sampled uniformly (x then y, top-left corners); a window is
    admitted only if the clean crop's Laplacian energy meets the threshold.
    Sampling stops after ``crops_per_page`` admissions or when the attempt
    budget (50 per requested crop) runs out, so sparse pages yield fewer
    pairs rather than looping forever.
    """
    if (raw.height, raw.width) != (clean.height, clean.width):
        raise ShapeMismatchError(
            "raw %dx%d vs clean %dx%d" % (raw.width, raw.height, clean.width, clean.height)
        )
    size = config.crop_size
    if size > min(clean.width, clean.height):
        raise ValueError(
            "crop size %d exceeds page extent %dx%d" % (size, clean.width, clean.height)
        )
    rng = np.random.default_rng(config.seed)
    pairs: list[CropPair] = []
    budget = config.crops_per_page * _ATTEMPTS_PER_CROP
    for _ in range(budget):
        if len(pairs) >= config.crops_per_page:
            break
        x = int(rng.integers(0, clean.width - size + 1))
        y = int(rng.integers(0, clean.height - size + 1))
        region = Region(x, y, size)
        clean_crop = crop(clean, region)
        energy = laplacian_energy(clean_crop)
        if energy >= config.energy_threshold:
            pairs.append(CropPair(region, crop(raw, region), clean_crop, energy))
    return pairs


def _prepared(surface: IlluminationSurface, size: int) -> IlluminationSurface:
    """Upsample a surface that is too small to host a size x size window."""
    if surface.width < size or surface.height < size:
        return resample_surface(surface, max(size, surface.width), max(size, surface.height))
    return surface


def make_augmented_set(
    pages: Sequence[tuple[str, Image]],
    bank: SurfaceBank,
    config: AugmentConfig,
) -> Iterator[AugmentedPair]:
    """Synthesize shaded/clean training pairs from clean pages and a bank.

    All randomness flows from ``config.seed`` through one master generator:
    per page a crop-sampling seed is drawn, then per admitted crop a bank
    index and a surface window corner. The draw order is part of the
    contract; two runs with equal inputs yield bitwise-equal pairs.
    """
    master = np.random.default_rng(config.seed)
    size = config.crop_size
    for page_id, page in pages:
        page_seed = int(master.integers(0, 2**63))
        crops = sample_crops(page, page, dataclasses.replace(config, seed=page_seed))
        for pair in crops:
            idx = int(master.integers(0, len(bank)))
            surf = _prepared(bank.surfaces[idx], size)
            sx = int(master.integers(0, surf.width - size + 1))
            sy = int(master.integers(0, surf.height - size + 1))
            sregion = Region(sx, sy, size)
            window = surface_window(surf, sregion)
            prov = Provenance(
                page_id=page_id,
                region=pair.region,
                surface_id=bank.ids[idx],
                surface_region=sregion,
                seed=config.seed,
            )
            yield AugmentedPair(apply_surface(pair.clean, window), pair.clean, prov)


def replay_pair(
    page: Image, surface: IlluminationSurface, provenance: Provenance
) -> tuple[Image, Image]:
    """Regenerate (input, target) from provenance alone, no RNG involved."""
    target = crop(page, provenance.region)
    prepared = _prepared(surface, provenance.region.size)
    window = surface_window(prepared, provenance.surface_region)
    return apply_surface(target, window), target


def load_surface_bank(directory) -> SurfaceBank:
    """Load every PNG/PPM/PGM in a directory (sorted by name) as a bank.

    Raster values are clamped into the surface range, so near-black pixels
    in a stored surface do not fail validation.
    """
    root = Path(directory)
    if not root.is_dir():
        raise ValueError("surface bank directory not found: %s" % root)
    paths = sorted(
        p for p in root.iterdir()
        if p.is_file() and p.suffix.lower() in (".png", ".ppm", ".pgm", ".pnm")
    )
    if not paths:
        raise ValueError("no surface rasters (.png/.ppm/.pgm) in %s" % root)
    surfaces = []
    ids = []
    for p in paths:
        img = load_image(p)
        surfaces.append(IlluminationSurface.from_array(img.data, clamp=True))
        ids.append(p.name)
    return SurfaceBank(tuple(surfaces), tuple(ids))
