import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from forgery_evidence.errors import BoxOutOfBounds, DecodeError, ImageFileNotFound, ImageTooSmall
from forgery_evidence.patch_grid import (
    Box,
    crop_with_margin,
    decompose,
    load_image,
    reassemble,
    to_luma,
)


def _write(tmp_path, arr, name, fmt, mode=None):
    path = tmp_path / name
    Image.fromarray(arr, mode=mode).save(path, format=fmt)
    return path


def test_load_png(tmp_path, rng):
    arr = rng.integers(0, 256, (224, 224, 3), dtype=np.uint8)
    img = load_image(_write(tmp_path, arr, "a.png", "PNG"))
    assert img.shape == (224, 224, 3) and img.dtype == np.uint8
    np.testing.assert_array_equal(img, arr)


def test_load_drops_alpha(tmp_path, rng):
    arr = rng.integers(0, 256, (32, 48, 4), dtype=np.uint8)
    img = load_image(_write(tmp_path, arr, "a.png", "PNG", mode="RGBA"))
    np.testing.assert_array_equal(img, arr[..., :3])


def test_load_jpeg(tmp_path):
    arr = np.full((40, 40, 3), 120, dtype=np.uint8)
    img = load_image(_write(tmp_path, arr, "a.jpg", "JPEG"))
    assert img.shape == (40, 40, 3)


def test_load_too_small(tmp_path):
    path = _write(tmp_path, np.zeros((8, 8, 3), dtype=np.uint8), "s.png", "PNG")
    with pytest.raises(ImageTooSmall):
        load_image(path, patch_size=16)


def test_load_truncated_jpeg(tmp_path, rng):
    buf = io.BytesIO()
    Image.fromarray(rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)).save(buf, format="JPEG")
    path = tmp_path / "t.jpg"
    path.write_bytes(buf.getvalue()[: len(buf.getvalue()) // 2])
    with pytest.raises(DecodeError):
        load_image(path)


def test_load_rejects_other_formats(tmp_path):
    path = _write(tmp_path, np.zeros((32, 32, 3), dtype=np.uint8), "a.bmp", "BMP")
    with pytest.raises(DecodeError):
        load_image(path)


def test_load_missing(tmp_path):
    with pytest.raises(ImageFileNotFound):
        load_image(tmp_path / "nope.png")


@pytest.mark.parametrize(
    "pixel, expected",
    [((255, 255, 255), 1.0), ((0, 0, 0), 0.0), ((255, 0, 0), 0.299)],
)
def test_luma_values(pixel, expected):
    img = np.array([[pixel]], dtype=np.uint8)
    assert to_luma(img)[0, 0] == pytest.approx(expected, abs=1e-12)


@given(st.tuples(*[st.integers(0, 255)] * 3), st.integers(0, 2), st.integers(1, 255))
def test_luma_bounded_and_monotone(rgb, channel, bump):
    px = np.array([[rgb]], dtype=np.uint8)
    lum = to_luma(px)[0, 0]
    assert 0.0 <= lum <= 1.0 + 1e-12
    brighter = px.astype(int)
    brighter[0, 0, channel] = min(255, brighter[0, 0, channel] + bump)
    assert to_luma(brighter.astype(np.uint8))[0, 0] >= lum


@pytest.mark.parametrize(
    "shape, grid",
    [((224, 224), (14, 14)), ((230, 230), (14, 14)), ((16, 32), (1, 2))],
)
def test_decompose_dims(shape, grid):
    g = decompose(np.zeros(shape), 16)
    assert g.shape == grid
    assert len(g) == grid[0] * grid[1]
    assert g.patches.shape == (*grid, 16, 16)


def test_decompose_too_small():
    with pytest.raises(ImageTooSmall):
        decompose(np.zeros((10, 40)), 16)


def test_patch_boxes_tile_region(rng):
    plane = rng.random((230, 213))
    g = decompose(plane, 16)
    rebuilt = np.full((g.g_h * 16, g.g_w * 16), np.nan)
    for coord in g.coords():
        x, y, w, h = g.box(coord)
        assert np.all(np.isnan(rebuilt[y : y + h, x : x + w]))
        rebuilt[y : y + h, x : x + w] = g.patch(coord)
    np.testing.assert_array_equal(rebuilt, plane[: g.g_h * 16, : g.g_w * 16])
    np.testing.assert_array_equal(reassemble(g), rebuilt)


def test_decompose_deterministic(rng):
    plane = rng.random((64, 80))
    a, b = decompose(plane, 16), decompose(plane.copy(), 16)
    assert a.patches.tobytes() == b.patches.tobytes()


def test_crop_zero_margin_is_exact(rng):
    img = rng.integers(0, 256, (224, 224, 3), dtype=np.uint8)
    np.testing.assert_array_equal(crop_with_margin(img, Box(32, 48, 16, 16), 0), img[48:64, 32:48])


def test_crop_corner_clamps():
    img = np.zeros((224, 224, 3), dtype=np.uint8)
    assert crop_with_margin(img, Box(0, 0, 16, 16), 8).shape == (24, 24, 3)
    assert crop_with_margin(img, Box(208, 208, 16, 16), 8).shape == (24, 24, 3)


def test_crop_centered_margin():
    img = np.zeros((224, 224, 3), dtype=np.uint8)
    assert crop_with_margin(img, Box(104, 104, 16, 16), 8).shape == (32, 32, 3)


def test_crop_out_of_bounds():
    with pytest.raises(BoxOutOfBounds):
        crop_with_margin(np.zeros((32, 32, 3), dtype=np.uint8), Box(24, 0, 16, 16), 0)
