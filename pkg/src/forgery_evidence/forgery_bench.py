"""Synthetic local manipulations with patch-level ground truth.

A textured base image is edited inside a rectangle, the mining pipeline
runs on the result, and the selected evidence is scored against the set of
patches the rectangle touches.
"""

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import fft, ndimage

from .config import RunConfig
from .errors import RegionOutOfBounds
from .patch_grid import Box
from .pipeline import mine

KINDS = ("splice_noise", "splice_blur", "spectral_boost", "copy_move")


@dataclass(frozen=True)
class ManipulationSpec:
    """One local edit.

    ``strength`` is the noise std in [0, 1] intensity units for
    ``splice_noise``, the blur sigma in pixels for ``splice_blur`` and the
    high-band gain for ``spectral_boost``; ``copy_move`` ignores it.
    ``source`` is the top-left of the copied block for ``copy_move`` (drawn
    from ``seed`` when omitted).
    """

    kind: str
    region: Box
    strength: float
    seed: int = 0
    source: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown manipulation kind {self.kind!r}")
        if not self.strength > 0:
            raise ValueError("strength must be > 0")


def synthesize_base(width=224, height=224, seed=0):
    """Band-limited noise texture over a gentle gradient, as RGB ``uint8``."""
    rng = np.random.default_rng(seed)
    noise = ndimage.gaussian_filter(rng.standard_normal((height, width)), sigma=1.5, mode="wrap")
    noise /= noise.std()
    yy, xx = np.mgrid[0:height, 0:width]
    angle = rng.uniform(0, 2 * np.pi)
    ramp = (np.cos(angle) * xx / width + np.sin(angle) * yy / height) * 0.08
    luma = 0.5 + 0.06 * noise + ramp - ramp.mean()
    tint = np.array([1.0, 0.95, 0.9]) + rng.uniform(-0.03, 0.03, 3)
    rgb = luma[..., None] * tint
    return np.clip(np.rint(rgb * 255), 0, 255).astype(np.uint8)


BASES = ("texture", "flat")


def make_base(kind, width=224, height=224, seed=0):
    """``texture``: ``synthesize_base``; ``flat``: uniform mid-grey."""
    if kind == "flat":
        return np.full((height, width, 3), 128, dtype=np.uint8)
    if kind == "texture":
        return synthesize_base(width, height, seed)
    raise ValueError(f"unknown base {kind!r}")


def _check_region(img, region):
    height, width = img.shape[:2]
    x, y, w, h = region
    if x < 0 or y < 0 or w <= 0 or h <= 0 or x + w > width or y + h > height:
        raise RegionOutOfBounds(f"region {tuple(region)} outside image {width}x{height}")


def region_mask(shape, region, patch_size=16):
    """Boolean ``(g_h, g_w)`` mask of patches whose box intersects ``region``."""
    height, width = shape[:2]
    g_h, g_w = height // patch_size, width // patch_size
    x, y, w, h = region
    rows = (np.arange(g_h) * patch_size < y + h) & ((np.arange(g_h) + 1) * patch_size > y)
    cols = (np.arange(g_w) * patch_size < x + w) & ((np.arange(g_w) + 1) * patch_size > x)
    return rows[:, None] & cols[None, :]


def _boost_high_band(block, gain):
    h, w = block.shape
    coeffs = fft.dctn(block, norm="ortho")
    u, v = np.indices((h, w))
    high = (u / h + v / w) > 0.5
    coeffs[high] *= gain
    return fft.idctn(coeffs, norm="ortho")


def apply_manipulation(img, spec, patch_size=16):
    """Apply ``spec`` and return ``(edited_image, patch_mask)``."""
    _check_region(img, spec.region)
    x, y, w, h = spec.region
    rng = np.random.default_rng(spec.seed)
    out = img.astype(np.float64)
    sl = np.s_[y : y + h, x : x + w]
    if spec.kind == "splice_noise":
        out[sl] += rng.normal(0.0, spec.strength * 255.0, size=out[sl].shape)
    elif spec.kind == "splice_blur":
        blurred = ndimage.gaussian_filter(out, sigma=(spec.strength, spec.strength, 0), mode="reflect")
        out[sl] = blurred[sl]
    elif spec.kind == "spectral_boost":
        for ch in range(out.shape[2]):
            out[sl + (ch,)] = _boost_high_band(out[sl + (ch,)], spec.strength)
    else:
        sx, sy = spec.source if spec.source is not None else _pick_source(img.shape, spec.region, rng)
        _check_region(img, Box(sx, sy, w, h))
        out[sl] = img[sy : sy + h, sx : sx + w]
    edited = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return edited, region_mask(img.shape, spec.region, patch_size)


def _pick_source(shape, region, rng):
    height, width = shape[:2]
    x, y, w, h = region
    for _ in range(100):
        sx = int(rng.integers(0, width - w + 1))
        sy = int(rng.integers(0, height - h + 1))
        if sx + w <= x or x + w <= sx or sy + h <= y or y + h <= sy:
            return sx, sy
    return int(rng.integers(0, width - w + 1)), int(rng.integers(0, height - h + 1))


def place_region(shape, size, rng, patch_size=16):
    """Random patch-aligned placement of a ``(w, h)`` region."""
    height, width = shape[:2]
    w, h = size
    cols = (width - w) // patch_size
    rows = (height - h) // patch_size
    return Box(int(rng.integers(0, cols + 1)) * patch_size, int(rng.integers(0, rows + 1)) * patch_size, w, h)


@dataclass
class LocalizationReport:
    kind: str
    base: str
    strength: float
    n_seeds: int
    top_k: int
    hit_at_k: float
    hit_at_k_std: float
    mask_recall: float
    mask_recall_std: float
    pack_hit_fraction: float
    chance_rate: float
    params: dict
    per_seed: list

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write(self, path):
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path


def run_seed(seed, template, config, width=224, height=224, top_k=1, jitter=True, base="texture"):
    """Build, manipulate and mine one synthetic image; return a per-seed row."""
    p = config.patch_size
    base = make_base(base, width, height, seed)
    rng = np.random.default_rng([seed, 7])
    region = place_region(base.shape, template.region[2:], rng, p) if jitter else template.region
    spec = replace(template, region=region, seed=template.seed + seed)
    img, mask = apply_manipulation(base, spec, p)
    result = mine(img, config, image_id=f"synth-{seed}")
    entries = [e.candidate.coord for e in result.pack.entries]
    hits = [bool(mask[r - 1, c - 1]) for r, c in entries]
    k = min(top_k, len(hits))
    S = result.fused.S
    return {
        "seed": seed,
        "region": list(region),
        "pack_size": len(hits),
        "hit_at_k": sum(hits[:k]) / k,
        "pack_hit_fraction": sum(hits) / len(hits),
        "mask_recall": sum(hits) / int(mask.sum()),
        "masked_mean_score": float(S[mask].mean()),
        "unmasked_mean_score": float(S[~mask].mean()),
        "masked_noise_above_median": bool(np.all(result.noise.scores[mask] > 0)),
    }


def evaluate_localization(
    n_seeds, template, config=None, width=224, height=224, top_k=1, jitter=True, base="texture"
):
    """Run ``n_seeds`` synthetic trials and aggregate localization metrics.

    ``hit_at_k`` is the fraction of the first ``top_k`` pack entries that
    fall on manipulated patches; ``mask_recall`` the fraction of
    manipulated patches anywhere in the pack.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    config = config or RunConfig()
    rows = [run_seed(s, template, config, width, height, top_k, jitter, base) for s in range(n_seeds)]
    hit = np.array([r["hit_at_k"] for r in rows])
    rec = np.array([r["mask_recall"] for r in rows])
    g = (height // config.patch_size) * (width // config.patch_size)
    mask_cells = int(region_mask((height, width), Box(0, 0, *template.region[2:]), config.patch_size).sum())
    return LocalizationReport(
        kind=template.kind,
        base=base,
        strength=template.strength,
        n_seeds=n_seeds,
        top_k=top_k,
        hit_at_k=float(hit.mean()),
        hit_at_k_std=float(hit.std()),
        mask_recall=float(rec.mean()),
        mask_recall_std=float(rec.std()),
        pack_hit_fraction=float(np.mean([r["pack_hit_fraction"] for r in rows])),
        chance_rate=mask_cells / g,
        params=config.params(),
        per_seed=rows,
    )


def default_template(kind="splice_noise", strength=0.2, patch_size=16):
    """A 2x2-patch region; its position is re-drawn per seed."""
    return ManipulationSpec(kind=kind, region=Box(0, 0, 2 * patch_size, 2 * patch_size), strength=strength)
