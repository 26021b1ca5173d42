"""Image loading and decomposition into a non-overlapping patch grid.

Images are plain ``uint8`` arrays of shape ``(height, width, 3)``; luma
planes are ``float64`` arrays of shape ``(height, width)`` with values in
[0, 1]. Grid coordinates exposed to callers are 1-based ``(r, c)``.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import BoxOutOfBounds, DecodeError, ImageFileNotFound, ImageTooSmall

DEFAULT_PATCH_SIZE = 16
DEFAULT_CROP_MARGIN = 8

# BT.601 luma weights
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_ACCEPTED_FORMATS = {"PNG", "JPEG"}


class PatchCoord(NamedTuple):
    r: int
    c: int


class Box(NamedTuple):
    """Pixel rectangle: top-left corner plus extent."""

    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True)
class PatchGrid:
    """Luma patches of an image tiled from the top-left corner.

    Attributes:
        patch_size: side length P of every patch in pixels.
        patches: array of shape ``(g_h, g_w, P, P)``.
    """

    patch_size: int
    patches: np.ndarray

    @property
    def shape(self):
        return self.patches.shape[:2]

    @property
    def g_h(self):
        return self.patches.shape[0]

    @property
    def g_w(self):
        return self.patches.shape[1]

    def __len__(self):
        return self.g_h * self.g_w

    def coords(self):
        """All patch coordinates in row-major order."""
        return [PatchCoord(r, c) for r in range(1, self.g_h + 1) for c in range(1, self.g_w + 1)]

    def box(self, coord):
        r, c = coord
        if not (1 <= r <= self.g_h and 1 <= c <= self.g_w):
            raise IndexError(f"patch coordinate {tuple(coord)} outside {self.g_h}x{self.g_w} grid")
        p = self.patch_size
        return Box((c - 1) * p, (r - 1) * p, p, p)

    def patch(self, coord):
        r, c = coord
        return self.patches[r - 1, c - 1]


def load_image(path, patch_size=DEFAULT_PATCH_SIZE):
    """Decode a PNG or JPEG file into an sRGB ``uint8`` array, dropping alpha."""
    path = Path(path)
    if not path.is_file():
        raise ImageFileNotFound(f"no such image file: {path}")
    try:
        with Image.open(path) as im:
            if im.format not in _ACCEPTED_FORMATS:
                raise DecodeError(f"unsupported image format {im.format!r} in {path}")
            im.load()
            rgb = im.convert("RGB")
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    img = np.asarray(rgb, dtype=np.uint8).copy()
    _check_size(img.shape[1], img.shape[0], patch_size)
    return img


def save_png(img, path):
    Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def to_luma(img):
    """Per-pixel BT.601 luma scaled to [0, 1]."""
    img = np.asarray(img)
    return (img[..., :3].astype(np.float64) @ LUMA_WEIGHTS) / 255.0


def _check_size(width, height, patch_size):
    if width < patch_size or height < patch_size:
        raise ImageTooSmall(f"image {width}x{height} is smaller than patch size {patch_size}")


def decompose(plane, patch_size=DEFAULT_PATCH_SIZE):
    """Tile ``plane`` into ``floor(H/P) x floor(W/P)`` patches.

    Pixels to the right of ``g_w * P`` and below ``g_h * P`` are discarded.
    """
    plane = np.asarray(plane, dtype=np.float64)
    height, width = plane.shape
    _check_size(width, height, patch_size)
    g_h, g_w = height // patch_size, width // patch_size
    cropped = plane[: g_h * patch_size, : g_w * patch_size]
    patches = cropped.reshape(g_h, patch_size, g_w, patch_size).swapaxes(1, 2).copy()
    patches.setflags(write=False)
    return PatchGrid(patch_size=patch_size, patches=patches)


def reassemble(grid):
    """Inverse of :func:`decompose` over the retained top-left region."""
    g_h, g_w, p, _ = grid.patches.shape
    return grid.patches.swapaxes(1, 2).reshape(g_h * p, g_w * p)


def crop_with_margin(img, box, margin=DEFAULT_CROP_MARGIN):
    """Crop ``box`` grown by ``margin`` on every side, clamped to the image."""
    height, width = img.shape[:2]
    x, y, w, h = box
    if x < 0 or y < 0 or w <= 0 or h <= 0 or x + w > width or y + h > height:
        raise BoxOutOfBounds(f"box {tuple(box)} outside image {width}x{height}")
    x0, y0 = max(0, x - margin), max(0, y - margin)
    x1, y1 = min(width, x + w + margin), min(height, y + h + margin)
    return img[y0:y1, x0:x1].copy()
