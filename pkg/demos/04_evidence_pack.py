"""
Mining an evidence pack
=======================

The three scores are fused as S = sem + alpha * (freq + noise). The top
patches per cluster are thinned by grid NMS and packed with pixel crops.
"""

# %%
import json
import tempfile

from forgery_evidence import RunConfig, mine
from forgery_evidence.evidence import pack_to_dict, serialize_pack
from forgery_evidence.forgery_bench import ManipulationSpec, apply_manipulation, synthesize_base

img = synthesize_base(224, 224, seed=11)
img, mask = apply_manipulation(img, ManipulationSpec("splice_noise", (128, 32, 32, 32), 0.2, seed=4))

result = mine(img, RunConfig(), image_id="demo")
print(result.budget())

# %%
# Entries: best cluster first, then score. The first entry is the global maximum of S.
for e in result.pack.entries:
    c = e.candidate
    hit = "*" if mask[c.coord.r - 1, c.coord.c - 1] else " "
    print(f"{hit} ({c.coord.r:2d},{c.coord.c:2d}) cluster {c.cluster} S={c.score:7.3f}")

# %%
# alpha = 0 ranks by semantics alone.
sem_only = mine(img, RunConfig(alpha=0.0), image_id="demo")
print("top entry, alpha=0:", sem_only.pack.entries[0].candidate.coord)

# %%
out = tempfile.mkdtemp()
manifest = serialize_pack(result.pack, out)
print(manifest)
print(json.dumps(pack_to_dict(result.pack)["entries"][0], indent=2))
