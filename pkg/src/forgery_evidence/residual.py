"""High-pass residual energy and its robust (median/MAD) noise anomaly."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyGrid, NonPositiveSigma

DEFAULT_SIGMA = 1.0
DEFAULT_EPSILON = 1e-6


def gaussian_kernel(sigma):
    """Normalized 1D Gaussian taps over radius ``ceil(3 * sigma)``."""
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _blur_axis(a, kernel, axis):
    radius = len(kernel) // 2
    pad = [(0, 0)] * a.ndim
    pad[axis] = (radius, radius)
    # reflect about the edge, duplicating the border sample
    padded = np.pad(a, pad, mode="symmetric")
    n = a.shape[axis]
    out = np.zeros_like(a)
    for i, w in enumerate(kernel):
        out += w * np.take(padded, np.arange(i, i + n), axis=axis)
    return out


def gaussian_blur(patch, sigma=DEFAULT_SIGMA):
    """Separable Gaussian blur of a patch or a stack ``(..., P, P)``.

    Each patch is blurred in isolation with reflect padding at its borders.
    """
    kernel = gaussian_kernel(sigma)
    patch = np.asarray(patch, dtype=np.float64)
    return _blur_axis(_blur_axis(patch, kernel, -1), kernel, -2)


def residual_energy(patch, blurred):
    """Mean absolute high-pass residual; reduces the last two axes."""
    patch = np.asarray(patch, dtype=np.float64)
    blurred = np.asarray(blurred, dtype=np.float64)
    if patch.shape != blurred.shape:
        raise DimensionMismatch(f"patch {patch.shape} and blurred {blurred.shape} differ")
    e = np.abs(patch - blurred).mean(axis=(-2, -1))
    return float(e) if e.ndim == 0 else e


def residual_field(grid, sigma=DEFAULT_SIGMA):
    """Residual energy of every patch, shape ``(g_h, g_w)``."""
    return residual_energy(grid.patches, gaussian_blur(grid.patches, sigma))


def lower_median(values):
    """Median taking the lower middle element for even counts."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        raise EmptyGrid("median of an empty set")
    return float(v[(v.size - 1) // 2])


def mad(values, center=None):
    """Median absolute deviation (lower-median convention, unscaled)."""
    v = np.asarray(values, dtype=np.float64)
    if center is None:
        center = lower_median(v)
    return lower_median(np.abs(v - center))


@dataclass(frozen=True)
class NoiseScores:
    scores: np.ndarray
    median_used: float
    mad_used: float
    epsilon: float


def noise_anomaly(energies, epsilon=DEFAULT_EPSILON):
    """Robust z-score of residual energies: ``(E - median) / (MAD + epsilon)``."""
    e = np.asarray(energies, dtype=np.float64)
    if e.size == 0:
        raise EmptyGrid("residual field is empty")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    med = lower_median(e)
    spread = mad(e, med)
    return NoiseScores(
        scores=(e - med) / (spread + epsilon),
        median_used=med,
        mad_used=spread,
        epsilon=float(epsilon),
    )
