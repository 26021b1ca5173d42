"""
Semantic clusters and discrepancy
=================================

Patch embeddings are grouped by spherical k-means. A patch's semantic
score is 1 - cos(patch, CLS). Embeddings can come from any encoder via
JSON; without one, an intrinsic descriptor of each patch is used.
"""

# %%
import json
import tempfile
from pathlib import Path

import numpy as np

from forgery_evidence.forgery_bench import synthesize_base
from forgery_evidence.patch_grid import decompose, to_luma
from forgery_evidence.semantics import ingest_embeddings, intrinsic_embed, semantic_scores, spherical_kmeans

grid = decompose(to_luma(synthesize_base(224, 224, seed=5)), 16)
emb = intrinsic_embed(grid)
model = spherical_kmeans(emb, k_clusters=4, seed=42)
print("iterations:", model.iterations_run)
print("objective:", np.round(model.objective, 4))
print(model.assignment)

# %%
sem = semantic_scores(emb)
print("semantic discrepancy range:", sem.min().round(4), sem.max().round(4))

# %%
# External embeddings: a JSON file with dim, grid, cls and patches.
rng = np.random.default_rng(0)
doc = {
    "dim": 8,
    "grid": [grid.g_h, grid.g_w],
    "cls": rng.standard_normal(8).tolist(),
    "patches": rng.standard_normal((grid.g_h * grid.g_w, 8)).tolist(),  # row-major
}
path = Path(tempfile.mkdtemp()) / "emb.json"
path.write_text(json.dumps(doc))
ext = ingest_embeddings(path, expected_grid=(grid.g_h, grid.g_w))
print("ingested:", ext.patches.shape, ext.source)
