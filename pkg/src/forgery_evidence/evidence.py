"""Score fusion, per-cluster top-k, grid NMS and evidence-pack assembly."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, EmptyEvidence, IoError, NegativeAlpha
from .patch_grid import DEFAULT_CROP_MARGIN, Box, PatchCoord, crop_with_margin, save_png

DEFAULT_ALPHA = 0.7
DEFAULT_K1 = 4
DEFAULT_TAU = 2.0

PARAM_KEYS = ("alpha", "k_clusters", "k1", "tau", "k_bands", "patch_size", "sigma", "epsilon", "seed")


@dataclass(frozen=True)
class FusedScores:
    """Fused suspiciousness ``S = sem + alpha * (freq + noise)`` with its parts."""

    S: np.ndarray
    alpha: float
    sem: np.ndarray
    freq: np.ndarray
    noise: np.ndarray


@dataclass(frozen=True)
class Candidate:
    coord: PatchCoord
    score: float
    cluster: int
    sem: float
    freq: float
    noise: float


@dataclass
class EvidenceEntry:
    candidate: Candidate
    box: Box
    crop: np.ndarray
    crop_name: str = ""


@dataclass
class EvidencePack:
    image_id: str
    params: dict
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)


def fuse(sem, freq, noise, alpha=DEFAULT_ALPHA):
    """Combine semantic, frequency and noise anomaly grids."""
    if alpha < 0:
        raise NegativeAlpha(f"alpha must be >= 0, got {alpha}")
    sem, freq, noise = (np.asarray(a, dtype=np.float64) for a in (sem, freq, noise))
    if not sem.shape == freq.shape == noise.shape:
        raise DimensionMismatch(f"score grids differ: {sem.shape}, {freq.shape}, {noise.shape}")
    S = sem + alpha * (freq + noise)
    return FusedScores(S=S, alpha=float(alpha), sem=sem, freq=freq, noise=noise)


def _candidate(fused, assignment, r, c):
    i, j = r - 1, c - 1
    return Candidate(
        coord=PatchCoord(r, c),
        score=float(fused.S[i, j]),
        cluster=int(assignment[i, j]),
        sem=float(fused.sem[i, j]),
        freq=float(fused.freq[i, j]),
        noise=float(fused.noise[i, j]),
    )


def rank_key(cand):
    """Descending score, ties in row-major order."""
    return (-cand.score, cand.coord.r, cand.coord.c)


def topk_per_cluster(fused, model, k1=DEFAULT_K1):
    """Highest-scoring ``k1`` members of every cluster.

    Returns ``{cluster_id: [Candidate, ...]}`` for clusters 1..K, each list
    in descending score order.
    """
    if k1 < 1:
        raise ValueError(f"k1 must be >= 1, got {k1}")
    assignment = np.asarray(model.assignment if hasattr(model, "assignment") else model)
    if assignment.shape != fused.S.shape:
        raise DimensionMismatch(f"assignment {assignment.shape} vs scores {fused.S.shape}")
    k = int(assignment.max())
    out = {}
    for j in range(1, k + 1):
        rows, cols = np.nonzero(assignment == j)
        cands = [_candidate(fused, assignment, int(r) + 1, int(c) + 1) for r, c in zip(rows, cols)]
        cands.sort(key=rank_key)
        out[j] = cands[:k1]
    return out


def nms_keep_mask(coords, scores, tau=DEFAULT_TAU):
    """Greedy grid NMS over one or many candidate sets.

    Args:
        coords: integer array ``(..., n, 2)`` of grid (row, col) positions.
        scores: array ``(..., n)``.
        tau: minimum Euclidean grid distance between kept candidates.

    Returns:
        Boolean keep mask ``(..., n)`` aligned with the input order.
    """
    coords = np.asarray(coords)
    scores = np.asarray(scores, dtype=np.float64)
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    n = scores.shape[-1]
    if n == 0:
        return np.zeros(scores.shape, dtype=bool)
    order = np.lexsort((coords[..., 1], coords[..., 0], -scores), axis=-1)
    rows = np.take_along_axis(coords[..., 0], order, axis=-1).astype(np.float64)
    cols = np.take_along_axis(coords[..., 1], order, axis=-1).astype(np.float64)
    dr = rows[..., :, None] - rows[..., None, :]
    dc = cols[..., :, None] - cols[..., None, :]
    near = dr * dr + dc * dc < tau * tau
    kept = np.zeros(scores.shape, dtype=bool)
    kept[..., 0] = True
    for i in range(1, n):
        kept[..., i] = ~np.any(near[..., i, :i] & kept[..., :i], axis=-1)
    mask = np.empty_like(kept)
    np.put_along_axis(mask, order, kept, axis=-1)
    return mask


def grid_nms(candidates, tau=DEFAULT_TAU):
    """Suppress candidates closer than ``tau`` grid units to a better kept one."""
    cands = sorted(candidates, key=rank_key)
    if not cands:
        return []
    coords = np.array([c.coord for c in cands])
    scores = np.array([c.score for c in cands])
    keep = nms_keep_mask(coords, scores, tau)
    return [c for c, k in zip(cands, keep) if k]


def select_evidence(fused, model, k1=DEFAULT_K1, tau=DEFAULT_TAU):
    """Per-cluster top-k followed by within-cluster NMS."""
    return {j: grid_nms(cands, tau) for j, cands in topk_per_cluster(fused, model, k1).items()}


PACK_ORDERS = ("score", "raster")


def order_entries(per_cluster, order="score"):
    """Flatten per-cluster lists.

    ``score``: best cluster first, then score, then row-major.
    ``raster``: plain row-major over the grid, for order ablations.
    """
    if order not in PACK_ORDERS:
        raise ValueError(f"unknown pack order {order!r}")
    if order == "raster":
        return sorted((c for cands in per_cluster.values() for c in cands), key=lambda c: c.coord)
    groups = [(j, sorted(c, key=rank_key)) for j, c in per_cluster.items() if c]
    groups.sort(key=lambda g: (-g[1][0].score, g[0]))
    return [cand for _, cands in groups for cand in cands]


def assemble_pack(per_cluster, grid, img, params, image_id="image", margin=DEFAULT_CROP_MARGIN, order="score"):
    """Build the ordered evidence pack with a pixel crop per entry."""
    ordered = order_entries(per_cluster, order)
    if not ordered:
        raise EmptyEvidence("no evidence candidates survived selection")
    entries = []
    for i, cand in enumerate(ordered):
        box = grid.box(cand.coord)
        entries.append(
            EvidenceEntry(
                candidate=cand,
                box=box,
                crop=crop_with_margin(img, box, margin),
                crop_name=f"ev_{i}.png",
            )
        )
    snapshot = {key: params[key] for key in PARAM_KEYS}
    return EvidencePack(image_id=image_id, params=snapshot, entries=entries)


def pack_to_dict(pack):
    return {
        "image_id": pack.image_id,
        "params": {key: pack.params[key] for key in PARAM_KEYS},
        "entries": [
            {
                "r": e.candidate.coord.r,
                "c": e.candidate.coord.c,
                "cluster": e.candidate.cluster,
                "score": e.candidate.score,
                "sem": e.candidate.sem,
                "freq": e.candidate.freq,
                "noise": e.candidate.noise,
                "box": list(e.box),
                "crop": e.crop_name,
            }
            for e in pack.entries
        ],
    }


def serialize_pack(pack, out_dir):
    """Write ``pack.json`` and one PNG crop per entry; return the manifest path."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for e in pack.entries:
            save_png(e.crop, out_dir / e.crop_name)
        manifest = out_dir / "pack.json"
        manifest.write_text(json.dumps(pack_to_dict(pack), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write evidence pack to {out_dir}: {exc}") from exc
    return manifest


def deserialize_pack(manifest):
    manifest = Path(manifest)
    try:
        doc = json.loads(manifest.read_text(encoding="utf-8"))
        entries = []
        for row in doc["entries"]:
            with Image.open(manifest.parent / row["crop"]) as im:
                crop = np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
            cand = Candidate(
                coord=PatchCoord(row["r"], row["c"]),
                score=row["score"],
                cluster=row["cluster"],
                sem=row["sem"],
                freq=row["freq"],
                noise=row["noise"],
            )
            entries.append(EvidenceEntry(candidate=cand, box=Box(*row["box"]), crop=crop, crop_name=row["crop"]))
    except OSError as exc:
        raise IoError(f"cannot read evidence pack {manifest}: {exc}") from exc
    return EvidencePack(image_id=doc["image_id"], params=doc["params"], entries=entries)
