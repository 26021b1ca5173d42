"""DCT band-energy spectra and the Jensen-Shannon frequency anomaly.

Each patch is transformed with an orthonormal 2D DCT-II. Non-DC
coefficients are grouped into ``k_bands`` contiguous ranges of the
diagonal index ``u + v``; the band energies are normalized into a
distribution, and a patch's anomaly is its JSD (base 2) from the mean
distribution of the image.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import EmptyGrid, LengthMismatch

DEFAULT_K_BANDS = 8


@lru_cache(maxsize=16)
def dct_matrix(n):
    """Orthonormal DCT-II basis ``C`` such that ``C @ x`` transforms ``x``."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    c[0] /= np.sqrt(2.0)
    c.setflags(write=False)
    return c


def dct2(patch):
    """Orthonormal 2D DCT-II of a square patch, or a stack ``(..., P, P)``."""
    patch = np.asarray(patch, dtype=np.float64)
    n = patch.shape[-1]
    if patch.shape[-2] != n:
        raise ValueError(f"patch must be square, got {patch.shape[-2:]}")
    c = dct_matrix(n)
    # AC terms are shift-invariant: transforming x - x[0, 0] makes a constant
    # patch give exactly zero AC energy; the DC term is restored afterwards
    anchor = patch[..., :1, :1]
    coeffs = c @ (patch - anchor) @ c.T
    coeffs[..., 0, 0] += n * anchor[..., 0, 0]
    return coeffs


@dataclass(frozen=True)
class BandPartition:
    """Assignment of DCT coefficients to frequency bands.

    ``band_of[u, v]`` is the 1-based band of coefficient ``(u, v)``; the DC
    entry is 0 and belongs to no band.
    """

    k_bands: int
    band_of: np.ndarray

    @property
    def patch_size(self):
        return self.band_of.shape[0]


@lru_cache(maxsize=32)
def band_partition(patch_size, k_bands=DEFAULT_K_BANDS):
    """Split diagonals ``u + v = 1 .. 2(P-1)`` into ``k_bands`` equal-width ranges."""
    n_diag = 2 * (patch_size - 1)
    if k_bands < 1:
        raise ValueError("k_bands must be >= 1")
    if n_diag < k_bands:
        raise ValueError(f"patch size {patch_size} too small for {k_bands} bands")
    u, v = np.indices((patch_size, patch_size))
    s = u + v
    band_of = np.where(s == 0, 0, (s - 1) * k_bands // n_diag + 1)
    band_of.setflags(write=False)
    return BandPartition(k_bands=k_bands, band_of=band_of)


def band_energies(coeffs, partition):
    """Squared-coefficient energy per band, DC excluded.

    Works on a single ``(P, P)`` map or any stack ``(..., P, P)``; returns
    ``(..., k_bands)``.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[-2:] != partition.band_of.shape:
        raise LengthMismatch(
            f"coefficients {coeffs.shape[-2:]} do not match partition {partition.band_of.shape}"
        )
    # one-hot (P*P, K) membership; DC row is all zeros
    flat = partition.band_of.ravel()
    members = np.zeros((flat.size, partition.k_bands))
    nz = flat > 0
    members[np.flatnonzero(nz), flat[nz] - 1] = 1.0
    sq = (coeffs**2).reshape(*coeffs.shape[:-2], -1)
    return sq @ members


def band_distribution(energies):
    """Normalize band energies to a distribution; all-zero maps to uniform."""
    e = np.asarray(energies, dtype=np.float64)
    if np.any(e < 0):
        raise ValueError("band energies must be non-negative")
    total = e.sum(axis=-1, keepdims=True)
    k = e.shape[-1]
    safe = np.where(total > 0, total, 1.0)
    return np.where(total > 0, e / safe, 1.0 / k)


def mean_profile(distributions):
    """Mean band distribution over the grid.

    Accepts a ``(g_h, g_w, K)`` array or a list of length-K vectors; the sum
    runs left to right in row-major order so the result is bit-reproducible.
    """
    q = np.asarray(distributions, dtype=np.float64)
    if q.size == 0:
        raise EmptyGrid("cannot average an empty set of band distributions")
    q = q.reshape(-1, q.shape[-1])
    total = np.zeros(q.shape[1])
    for row in q:
        total += row
    return total / q.shape[0]


def _plogp_ratio(p, m):
    # p * log2(p / m) with 0 * log 0 = 0
    p, m = np.broadcast_arrays(p, m)
    out = np.zeros(p.shape)
    mask = p > 0
    out[mask] = p[mask] * np.log2(p[mask] / m[mask])
    return out


def jsd(p, q):
    """Jensen-Shannon divergence in bits; broadcasts over leading axes."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape[-1] != q.shape[-1]:
        raise LengthMismatch(f"distribution lengths differ: {p.shape[-1]} vs {q.shape[-1]}")
    m = 0.5 * (p + q)
    d = 0.5 * _plogp_ratio(p, m).sum(axis=-1) + 0.5 * _plogp_ratio(q, m).sum(axis=-1)
    d = np.clip(d, 0.0, 1.0)
    return float(d) if d.ndim == 0 else d


def freq_anomaly(q_patch, q_mean):
    """Frequency anomaly of one patch (or a grid of patches) against the mean profile."""
    return jsd(q_patch, q_mean)


@dataclass(frozen=True)
class SpectralResult:
    distributions: np.ndarray  # (g_h, g_w, K)
    profile: np.ndarray  # (K,)
    scores: np.ndarray  # (g_h, g_w) frequency anomaly


def patch_distributions(grid, k_bands=DEFAULT_K_BANDS):
    """Band distribution of every patch in ``grid``, shape ``(g_h, g_w, K)``."""
    part = band_partition(grid.patch_size, k_bands)
    return band_distribution(band_energies(dct2(grid.patches), part))


def spectral_scores(grid, k_bands=DEFAULT_K_BANDS):
    q = patch_distributions(grid, k_bands)
    profile = mean_profile(q)
    return SpectralResult(distributions=q, profile=profile, scores=freq_anomaly(q, profile))
