"""
Prompting a multimodal model
============================

The pack becomes one chat-completions request: captions and crops
interleaved, then a one-word question. The mock backend answers offline
from the caption scores. Set EVIDENCE_LVLM_ENDPOINT and pass a
BackendConfig to reach a real server.
"""

# %%
from forgery_evidence import RunConfig, mine
from forgery_evidence.forgery_bench import ManipulationSpec, apply_manipulation, synthesize_base
from forgery_evidence.gateway import build_request, parse_verdict, query_backend

clean = synthesize_base(224, 224, seed=2)
forged, _ = apply_manipulation(clean, ManipulationSpec("splice_noise", (64, 64, 32, 32), 0.2))

# %%
# The mock says "Fake" when the mean caption score exceeds the threshold.
# Clean images of this kind average about 2, spliced ones 6 to 9.
for name, img in (("clean", clean), ("forged", forged)):
    req = build_request(mine(img, RunConfig(), image_id=name).pack)
    verdict = query_backend(req, mock_threshold=4.0)
    print(f"{name}: {verdict.label}  ({len(req.parts)} parts, {len(req.body_bytes())} bytes)")

# %%
print([p.text for p in req.parts if p.role == "caption"][:2])

# %%
# Verdict parsing takes the last real/fake word.
for text in ("Fake", "real.", "Not real -- fake", "unsure"):
    print(repr(text), "->", parse_verdict(text))
