"""Patch embeddings, spherical k-means clustering and CLS discrepancy.

Embeddings either come from an external vision encoder (JSON file, see
:func:`ingest_embeddings`) or are built intrinsically from pixel
statistics when no encoder output is available.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    GridMismatch,
    ImageFileNotFound,
    NonFiniteValue,
    SchemaError,
    TooManyClusters,
    ZeroVector,
)
from .spectral import DEFAULT_K_BANDS, patch_distributions

DEFAULT_K_CLUSTERS = 4
DEFAULT_MAX_ITER = 100

_SCHEMA_KEYS = {"dim", "grid", "cls", "patches"}


@dataclass(frozen=True)
class EmbeddingSet:
    """CLS anchor plus one embedding per grid patch.

    ``patches`` has shape ``(g_h, g_w, D)``. ``repaired`` counts zero-norm
    patch embeddings that were replaced by the first unit vector.
    """

    cls: np.ndarray
    patches: np.ndarray
    source: str
    repaired: int = 0

    @property
    def dim(self):
        return self.cls.shape[0]

    @property
    def grid(self):
        return self.patches.shape[:2]


def make_embedding_set(cls, patches, source):
    """Validate raw arrays and apply the zero-vector repair rule."""
    cls = np.array(cls, dtype=np.float64)
    patches = np.array(patches, dtype=np.float64)
    if not (np.all(np.isfinite(cls)) and np.all(np.isfinite(patches))):
        raise NonFiniteValue("embedding contains NaN or Inf")
    if np.linalg.norm(cls) == 0:
        raise ZeroVector("CLS embedding has zero norm")
    norms = np.linalg.norm(patches, axis=-1)
    zero = norms == 0
    if zero.any():
        patches[zero] = 0.0
        patches[zero, 0] = 1.0
    return EmbeddingSet(cls=cls, patches=patches, source=source, repaired=int(zero.sum()))


def _float_list(value, length, what):
    if not isinstance(value, list) or len(value) != length:
        raise SchemaError(f"{what} must be a list of {length} numbers")
    out = []
    for x in value:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise SchemaError(f"{what} contains a non-numeric entry {x!r}")
        out.append(float(x))
    return out


def ingest_embeddings(path, expected_grid):
    """Load encoder output from the JSON embedding file.

    The document has exactly the keys ``dim``, ``grid`` (``[g_h, g_w]``),
    ``cls`` and ``patches`` (row-major list of ``g_h * g_w`` vectors).
    """
    path = Path(path)
    if not path.is_file():
        raise ImageFileNotFound(f"no such embedding file: {path}")
    try:
        # NaN/Infinity literals are parsed so they can be reported as NonFiniteValue
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"embedding file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("embedding document must be a JSON object")
    keys = set(doc)
    if keys != _SCHEMA_KEYS:
        extra, missing = sorted(keys - _SCHEMA_KEYS), sorted(_SCHEMA_KEYS - keys)
        raise SchemaError(f"embedding keys mismatch (unknown={extra}, missing={missing})")
    dim, grid = doc["dim"], doc["grid"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError("dim must be a positive integer")
    if (
        not isinstance(grid, list)
        or len(grid) != 2
        or not all(isinstance(g, int) and not isinstance(g, bool) and g > 0 for g in grid)
    ):
        raise SchemaError("grid must be [g_h, g_w] with positive integers")
    g_h, g_w = grid
    cls = _float_list(doc["cls"], dim, "cls")
    rows = doc["patches"]
    if not isinstance(rows, list) or len(rows) != g_h * g_w:
        raise SchemaError(f"patches must hold {g_h * g_w} rows for grid {g_h}x{g_w}")
    patches = [_float_list(row, dim, f"patches[{i}]") for i, row in enumerate(rows)]
    if tuple(expected_grid) != (g_h, g_w):
        raise GridMismatch(f"embedding grid {g_h}x{g_w} != image grid {tuple(expected_grid)}")
    arr = np.array(patches).reshape(g_h, g_w, dim)
    return make_embedding_set(cls, arr, source="ingested")


def write_embeddings(emb, path):
    g_h, g_w = emb.grid
    doc = {
        "dim": emb.dim,
        "grid": [g_h, g_w],
        "cls": emb.cls.tolist(),
        "patches": emb.patches.reshape(-1, emb.dim).tolist(),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def _unit(v, axis=-1):
    n = np.linalg.norm(v, axis=axis, keepdims=True)
    return v / np.where(n > 0, n, 1.0)


def intrinsic_embed(grid, k_bands=DEFAULT_K_BANDS):
    """Encoder-free descriptors: band distribution, mean luma and luma std.

    Each patch descriptor is unit-normalized; the CLS anchor is the
    normalized mean descriptor.
    """
    q = patch_distributions(grid, k_bands)
    mean = grid.patches.mean(axis=(-2, -1))[..., None]
    std = grid.patches.std(axis=(-2, -1))[..., None]
    desc = np.concatenate([q, mean, std], axis=-1)
    emb = make_embedding_set(np.ones(desc.shape[-1]), desc, source="intrinsic")
    desc = _unit(emb.patches)
    cls = _unit(desc.reshape(-1, desc.shape[-1]).mean(axis=0))
    return EmbeddingSet(cls=cls, patches=desc, source="intrinsic", repaired=emb.repaired)


@dataclass(frozen=True)
class ClusterModel:
    """Result of spherical k-means.

    ``assignment`` holds 1-based cluster ids over the grid; ``objective``
    is the per-iteration history of the summed member-to-centroid cosine.
    """

    centroids: np.ndarray
    assignment: np.ndarray
    iterations_run: int
    seed: int
    objective: list = field(default_factory=list)

    @property
    def k_clusters(self):
        return self.centroids.shape[0]

    def members(self, cluster):
        """Row-major 1-based coordinates belonging to ``cluster``."""
        rows, cols = np.nonzero(self.assignment == cluster)
        return [(int(r) + 1, int(c) + 1) for r, c in zip(rows, cols)]


def _seed_centroids(x, k, rng):
    # cosine k-means++: draw proportional to 1 - max cosine to chosen centroids
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    best = x @ x[chosen[0]]
    for _ in range(1, k):
        w = np.clip(1.0 - best, 0.0, None)
        w[chosen] = 0.0
        if w.sum() > 0:
            idx = int(rng.choice(n, p=w / w.sum()))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        best = np.maximum(best, x @ x[idx])
    return x[chosen].copy()


def _update_centroids(x, z, centroids):
    new = centroids.copy()
    for j in range(centroids.shape[0]):
        s = x[z == j].sum(axis=0)
        n = np.linalg.norm(s)
        # a member sum of exactly zero leaves every unit centroid equally good
        if n > 0:
            new[j] = s / n
    return new


def _repair_empty(x, z, centroids):
    k = centroids.shape[0]
    z = z.copy()
    centroids = centroids.copy()
    while True:
        counts = np.bincount(z, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return z, centroids
        j = int(empty[0])
        fit = np.einsum("ij,ij->i", x, centroids[z])
        fit[counts[z] < 2] = np.inf
        i = int(np.argmin(fit))
        z[i] = j
        centroids[j] = x[i]


def _objective(x, z, centroids):
    return float(np.einsum("ij,ij->i", x, centroids[z]).sum())


def spherical_kmeans(emb, k_clusters=DEFAULT_K_CLUSTERS, seed=42, max_iter=DEFAULT_MAX_ITER):
    """Cluster unit-normalized patch embeddings by cosine similarity.

    Lloyd iterations alternate argmax-cosine assignment (ties to the lowest
    id) and renormalized-mean centroids until assignments stop changing or
    ``max_iter`` is reached. Empty clusters are reseeded with the member
    that fits its current centroid worst.
    """
    g_h, g_w, d = emb.patches.shape
    n = g_h * g_w
    if not 1 <= k_clusters <= n:
        raise TooManyClusters(f"k_clusters={k_clusters} not in 1..{n}")
    x = _unit(emb.patches.reshape(n, d))
    rng = np.random.default_rng(seed)
    centroids = _seed_centroids(x, k_clusters, rng)
    z = None
    history = []
    iterations = 0
    for _ in range(max_iter):
        z_new = np.argmax(x @ centroids.T, axis=1)
        z_new, centroids = _repair_empty(x, z_new, centroids)
        if z is not None and np.array_equal(z, z_new):
            break
        z = z_new
        centroids = _update_centroids(x, z, centroids)
        iterations += 1
        history.append(_objective(x, z, centroids))
    if z is None:
        z, centroids = _repair_empty(x, np.argmax(x @ centroids.T, axis=1), centroids)
    return ClusterModel(
        centroids=centroids,
        assignment=(z + 1).reshape(g_h, g_w),
        iterations_run=iterations,
        seed=seed,
        objective=history,
    )


def semantic_discrepancy(t, cls):
    """``1 - cos(t, cls)``; broadcasts over leading axes of ``t``."""
    t = np.asarray(t, dtype=np.float64)
    cls = np.asarray(cls, dtype=np.float64)
    tn = np.linalg.norm(t, axis=-1)
    cn = np.linalg.norm(cls)
    if cn == 0 or np.any(tn == 0):
        raise ZeroVector("cosine undefined for a zero vector")
    cos = np.clip((t @ cls) / (tn * cn), -1.0, 1.0)
    out = 1.0 - cos
    return float(out) if out.ndim == 0 else out


def semantic_scores(emb):
    return semantic_discrepancy(emb.patches, emb.cls)


__all__ = [
    "ClusterModel",
    "EmbeddingSet",
    "ingest_embeddings",
    "intrinsic_embed",
    "make_embedding_set",
    "semantic_discrepancy",
    "semantic_scores",
    "spherical_kmeans",
    "write_embeddings",
]
