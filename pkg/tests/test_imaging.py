"""Raster I/O, color, and geometry contracts."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from docenhance.imaging import (
    CorruptStreamError,
    Image,
    MissingFileError,
    Plane,
    Region,
    RegionError,
    UnsupportedFormatError,
    WriteError,
    crop,
    encode_u8,
    load_image,
    resample,
    save_image,
    to_luminance,
)


def _write_png(path, array, mode=None):
    PILImage.fromarray(array, mode=mode).save(path, format="PNG")


# -- loading ----------------------------------------------------------------

def test_load_white_pixel(tmp_path):
    p = tmp_path / "white.png"
    _write_png(p, np.full((1, 1, 3), 255, dtype=np.uint8))
    img = load_image(p)
    assert (img.height, img.width, img.channels) == (1, 1, 3)
    assert np.array_equal(img.data, np.ones((1, 1, 3)))


def test_load_black_pixel(tmp_path):
    p = tmp_path / "black.png"
    _write_png(p, np.zeros((1, 1, 3), dtype=np.uint8))
    assert np.array_equal(load_image(p).data, np.zeros((1, 1, 3)))


def test_load_maps_codes_to_fractions(tmp_path):
    p = tmp_path / "steps.png"
    _write_png(p, np.array([[0, 85], [170, 255]], dtype=np.uint8))
    img = load_image(p)
    assert img.channels == 1
    expected = np.array([[0.0, 85 / 255], [170 / 255, 1.0]])[:, :, np.newaxis]
    assert np.array_equal(img.data, expected)


def test_load_discards_alpha(tmp_path):
    rgba = np.zeros((2, 2, 4), dtype=np.uint8)
    rgba[..., 0] = 200
    rgba[..., 3] = 7  # nearly transparent; must not affect the RGB samples
    p = tmp_path / "rgba.png"
    _write_png(p, rgba)
    img = load_image(p)
    assert img.channels == 3
    assert np.array_equal(img.data[..., 0], np.full((2, 2), 200 / 255))


def test_load_grayscale_alpha_collapses_to_one_channel(tmp_path):
    la = np.zeros((3, 3, 2), dtype=np.uint8)
    la[..., 0] = 90
    p = tmp_path / "la.png"
    _write_png(p, la, mode="LA")
    img = load_image(p)
    assert img.channels == 1
    assert np.array_equal(img.data[..., 0], np.full((3, 3), 90 / 255))


def test_load_palette_expands_to_rgb(tmp_path):
    pil = PILImage.fromarray(np.array([[3, 250]], dtype=np.uint8)).convert("P")
    p = tmp_path / "pal.png"
    pil.save(p, format="PNG")
    assert load_image(p).channels == 3


def test_load_bilevel_as_single_channel(tmp_path):
    pil = PILImage.fromarray(np.array([[0, 255]], dtype=np.uint8)).convert("1")
    p = tmp_path / "bw.png"
    pil.save(p, format="PNG")
    img = load_image(p)
    assert img.channels == 1
    assert np.array_equal(img.data[..., 0], np.array([[0.0, 1.0]]))


def test_load_ppm_and_pgm(tmp_path):
    rgb = np.arange(12, dtype=np.uint8).reshape(2, 2, 3)
    ppm = tmp_path / "img.ppm"
    PILImage.fromarray(rgb).save(ppm, format="PPM")
    assert np.array_equal(load_image(ppm).data, rgb / 255.0)
    gray = np.array([[9, 200]], dtype=np.uint8)
    pgm = tmp_path / "img.pgm"
    PILImage.fromarray(gray).save(pgm, format="PPM")
    assert np.array_equal(load_image(pgm).data[..., 0], gray / 255.0)


def test_load_missing_file(tmp_path):
    with pytest.raises(MissingFileError) as err:
        load_image(tmp_path / "nope.png")
    assert "nope.png" in str(err.value)


def test_load_undecodable_bytes(tmp_path):
    p = tmp_path / "junk.png"
    p.write_bytes(b"this is not a raster")
    with pytest.raises(CorruptStreamError):
        load_image(p)


def test_load_truncated_stream(tmp_path):
    p = tmp_path / "cut.png"
    _write_png(p, np.random.default_rng(0).integers(0, 256, (64, 64), dtype=np.uint8))
    data = p.read_bytes()
    p.write_bytes(data[: len(data) // 2])
    with pytest.raises(CorruptStreamError):
        load_image(p)


def test_load_rejects_foreign_format(tmp_path):
    p = tmp_path / "img.bmp"
    PILImage.fromarray(np.zeros((2, 2), dtype=np.uint8)).save(p, format="BMP")
    with pytest.raises(UnsupportedFormatError) as err:
        load_image(p)
    assert "BMP" in str(err.value)


def test_load_rejects_16bit_depth(tmp_path):
    p = tmp_path / "deep.png"
    PILImage.fromarray(np.full((2, 2), 1000, dtype=np.uint16)).save(p, format="PNG")
    with pytest.raises(UnsupportedFormatError):
        load_image(p)


# -- saving -----------------------------------------------------------------

def test_save_white_encodes_255(tmp_path):
    p = tmp_path / "w.png"
    save_image(Image(np.ones((2, 3, 3))), p)
    assert np.array_equal(np.asarray(PILImage.open(p)), np.full((2, 3, 3), 255))


def test_save_rounds_half_away_from_zero(tmp_path):
    p = tmp_path / "half.png"
    save_image(Image(np.full((1, 1, 1), 0.5)), p)
    assert np.asarray(PILImage.open(p))[0, 0] == 128


def test_save_suffix_selects_format(tmp_path):
    img = Image(np.full((2, 2, 3), 0.25))
    save_image(img, tmp_path / "a.ppm")
    assert PILImage.open(tmp_path / "a.ppm").format == "PPM"
    save_image(Image(np.full((2, 2, 1), 0.25)), tmp_path / "a.pgm")
    assert PILImage.open(tmp_path / "a.pgm").format == "PPM"
    with pytest.raises(UnsupportedFormatError):
        save_image(img, tmp_path / "a.jpg")


def test_save_to_missing_directory(tmp_path):
    with pytest.raises(WriteError):
        save_image(Image(np.ones((1, 1, 1))), tmp_path / "no" / "dir" / "x.png")


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), channels=st.sampled_from([1, 3]))
def test_roundtrip_error_bounded_by_one_code(tmp_path_factory, seed, channels):
    rng = np.random.default_rng(seed)
    img = Image(rng.random((4, 5, channels)))
    p = tmp_path_factory.mktemp("rt") / "x.png"
    save_image(img, p)
    back = load_image(p)
    assert np.abs(back.data - img.data).max() <= 1.0 / 255.0


def test_encode_u8_fixed_points():
    vals = np.array([0.0, 1.0, 0.5, 127.4 / 255, 127.5 / 255, 254.5 / 255])
    assert encode_u8(vals).tolist() == [0, 255, 128, 127, 128, 255]


# -- luminance ---------------------------------------------------------------

def test_luminance_white_is_exactly_one():
    img = Image(np.ones((2, 2, 3)))
    assert np.array_equal(to_luminance(img).data, np.ones((2, 2)))


def test_luminance_green_weight():
    img = Image(np.broadcast_to(np.array([0.0, 1.0, 0.0]), (1, 1, 3)).copy())
    assert to_luminance(img).data[0, 0] == 0.587


def test_luminance_weighted_sum():
    img = Image(np.broadcast_to(np.array([0.2, 0.4, 0.6]), (1, 1, 3)).copy())
    assert to_luminance(img).data[0, 0] == pytest.approx(0.363, abs=1e-12)


def test_luminance_grayscale_passthrough(rng):
    img = Image(rng.random((4, 4, 1)))
    assert np.array_equal(to_luminance(img).data, img.data[:, :, 0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_luminance_between_channel_extremes(seed):
    data = np.random.default_rng(seed).random((5, 4, 3))
    lum = to_luminance(Image(data)).data
    assert np.all(lum >= data.min(axis=2) - 1e-12)
    assert np.all(lum <= data.max(axis=2) + 1e-12)


# -- crop ---------------------------------------------------------------------

def test_crop_full_region_is_identity(rng):
    img = Image(rng.random((6, 6, 3)))
    out = crop(img, Region(0, 0, 6))
    assert np.array_equal(out.data, img.data)


def test_crop_single_pixel(rng):
    img = Image(rng.random((5, 7, 3)))
    out = crop(img, Region(3, 2, 1))
    assert np.array_equal(out.data[0, 0], img.data[2, 3])


def test_crop_reembed_roundtrip(rng):
    img = Image(rng.random((8, 8, 1)))
    region = Region(2, 3, 4)
    cut = crop(img, region)
    canvas = img.data.copy()
    canvas[region.y : region.y + 4, region.x : region.x + 4] = cut.data
    assert np.array_equal(canvas, img.data)


def test_crop_out_of_bounds():
    img = Image(np.ones((4, 4, 1)))
    with pytest.raises(RegionError):
        crop(img, Region(2, 2, 3))


def test_region_validation():
    with pytest.raises(ValueError):
        Region(-1, 0, 4)
    with pytest.raises(ValueError):
        Region(0, 0, 0)


# -- resample -----------------------------------------------------------------

def test_resample_identity_when_size_unchanged(rng):
    img = Image(rng.random((5, 9, 3)))
    out = resample(img, 9, 5)
    assert np.array_equal(out.data, img.data)


def test_resample_changes_geometry(rng):
    img = Image(rng.random((6, 4, 3)))
    out = resample(img, 8, 12)
    assert (out.width, out.height, out.channels) == (8, 12, 3)
    assert out.data.min() >= 0.0 and out.data.max() <= 1.0


def test_resample_rejects_empty_target(rng):
    with pytest.raises(ValueError):
        resample(Image(np.ones((2, 2, 1))), 0, 4)


# -- type invariants ----------------------------------------------------------

def test_image_rejects_bad_pixels():
    with pytest.raises(ValueError):
        Image(np.full((2, 2, 3), np.nan))
    with pytest.raises(ValueError):
        Image(np.full((2, 2, 3), 1.5))
    with pytest.raises(ValueError):
        Image(np.ones((2, 2, 2)))
    with pytest.raises(ValueError):
        Image(np.ones((0, 4, 1)))
    with pytest.raises(ValueError):
        Image(np.ones(7))


def test_image_promotes_2d_to_single_channel():
    img = Image(np.ones((3, 4)))
    assert img.channels == 1 and img.data.shape == (3, 4, 1)


def test_image_data_is_frozen_and_copied():
    src = np.full((2, 2, 1), 0.5)
    img = Image(src)
    with pytest.raises(ValueError):
        img.data[0, 0, 0] = 0.0
    # the caller's buffer stays writable and independent
    src[0, 0, 0] = 0.125
    assert img.data[0, 0, 0] == 0.5


def test_plane_validation():
    assert Plane(np.zeros((2, 2))).height == 2
    with pytest.raises(ValueError):
        Plane(np.zeros((2, 2, 1)))
    with pytest.raises(ValueError):
        Plane(np.full((2, 2), 2.0))
