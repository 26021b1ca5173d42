"""End-to-end evidence mining: image in, evidence pack out."""

import time
from dataclasses import dataclass, field

from .config import RunConfig
from .evidence import EvidencePack, FusedScores, assemble_pack, fuse, select_evidence
from .patch_grid import PatchGrid, decompose, to_luma
from .residual import NoiseScores, noise_anomaly, residual_field
from .semantics import ClusterModel, EmbeddingSet, ingest_embeddings, intrinsic_embed, semantic_scores, spherical_kmeans
from .spectral import SpectralResult, spectral_scores


@dataclass
class MiningResult:
    grid: PatchGrid
    spectral: SpectralResult
    energies: object
    noise: NoiseScores
    embeddings: EmbeddingSet
    clusters: ClusterModel
    fused: FusedScores
    selected: dict
    pack: EvidencePack
    timings: dict = field(default_factory=dict)

    @property
    def total_patches(self):
        return len(self.grid)

    def budget(self):
        """Evidence size against the whole-image patch-token count."""
        n = self.total_patches
        return {
            "pack_size": len(self.pack),
            "total_patches": n,
            "token_reduction": 1.0 - len(self.pack) / n,
        }


def mine(img, config=None, image_id="image", embeddings=None):
    """Run grid, spectral, residual, semantic and selection stages on ``img``.

    ``embeddings`` may be a preloaded :class:`EmbeddingSet`; otherwise
    ``config.embeddings_path`` is ingested when set, or intrinsic
    descriptors are used.
    """
    config = (config or RunConfig()).validate()
    timings = {}

    t0 = time.perf_counter()
    grid = decompose(to_luma(img), config.patch_size)
    timings["grid"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    spec = spectral_scores(grid, config.k_bands)
    timings["spectral"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    energies = residual_field(grid, config.sigma)
    noise = noise_anomaly(energies, config.epsilon)
    timings["residual"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if embeddings is None:
        if config.embeddings_path:
            embeddings = ingest_embeddings(config.embeddings_path, grid.shape)
        else:
            embeddings = intrinsic_embed(grid, config.k_bands)
    clusters = spherical_kmeans(embeddings, config.k_clusters, config.seed)
    sem = semantic_scores(embeddings)
    timings["semantics"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fused = fuse(sem, spec.scores, noise.scores, config.alpha)
    selected = select_evidence(fused, clusters, config.k1, config.tau)
    pack = assemble_pack(
        selected, grid, img, config.params(), image_id=image_id, margin=config.margin, order=config.pack_order
    )
    timings["evidence"] = time.perf_counter() - t0

    return MiningResult(
        grid=grid,
        spectral=spec,
        energies=energies,
        noise=noise,
        embeddings=embeddings,
        clusters=clusters,
        fused=fused,
        selected=selected,
        pack=pack,
        timings=timings,
    )
