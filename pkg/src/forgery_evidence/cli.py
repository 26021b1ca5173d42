"""Command-line entry point: ``forgery-evidence {mine,detect,bench,synthbench}``."""

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import forgery_bench
from .config import build_config, read_config_file
from .errors import EmptyDirectory, EvidenceError, GatewayError, SchemaError
from .evidence import serialize_pack
from .gateway import BackendConfig, PromptTemplate, build_request, load_template, query_backend
from .patch_grid import load_image
from .pipeline import mine

EXIT_INPUT = 2
EXIT_GATEWAY = 3

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}

_CONFIG_FLAGS = [
    ("--alpha", float),
    ("--k-clusters", int),
    ("--k-bands", int),
    ("--k1", int),
    ("--tau", float),
    ("--patch-size", int),
    ("--sigma", float),
    ("--epsilon", float),
    ("--seed", int),
    ("--margin", int),
    ("--embeddings-path", str),
    ("--prompt-template", str),
    ("--mock-threshold", float),
    ("--output-dir", str),
    ("--pack-order", str),
]


def _dump(doc):
    return json.dumps(doc, indent=2)


def _config_from_args(args):
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {flag[2:].replace("-", "_"): getattr(args, flag[2:].replace("-", "_")) for flag, _ in _CONFIG_FLAGS}
    overrides["backend"] = args.backend
    if args.include_full_image:
        overrides["include_full_image"] = True
    return build_config(file_values, overrides)


def _template(config):
    return load_template(config.prompt_template) if config.prompt_template else PromptTemplate()


def _backend_args(args, config):
    if config.backend == "mock":
        return None, config.mock_threshold
    cfg = BackendConfig.from_env(endpoint=args.endpoint, timeout=args.timeout, retries=args.retries)
    if not cfg.endpoint:
        raise SchemaError("http backend selected but no endpoint configured")
    return cfg, None


def detect_image(path, config, template, backend_cfg, mock_threshold, model_name=None):
    """Mine one image and query the backend; returns (verdict, result, request, timings)."""
    t0 = time.perf_counter()
    img = load_image(path, config.patch_size)
    load_time = time.perf_counter() - t0
    result = mine(img, config, image_id=Path(path).stem)
    t0 = time.perf_counter()
    req = build_request(
        result.pack,
        template,
        include_full_image=config.include_full_image,
        full_image=img,
        model_name=model_name,
    )
    verdict = query_backend(req, backend_cfg, mock_threshold=mock_threshold)
    gateway_time = time.perf_counter() - t0
    timings = {"load": load_time, **result.timings, "gateway": gateway_time}
    return verdict, result, req, timings


def cmd_mine(args):
    config = _config_from_args(args)
    img = load_image(args.image, config.patch_size)
    image_id = Path(args.image).stem
    result = mine(img, config, image_id=image_id)
    manifest = serialize_pack(result.pack, config.output_dir)
    doc = {"image_id": image_id, "manifest": str(manifest), **result.budget(), "params": config.params()}
    print(_dump(doc))
    return 0


def cmd_detect(args):
    config = _config_from_args(args)
    backend_cfg, threshold = _backend_args(args, config)
    verdict, result, req, _ = detect_image(args.image, config, _template(config), backend_cfg, threshold)
    if args.save_pack:
        serialize_pack(result.pack, config.output_dir)
    doc = {
        "image_id": result.pack.image_id,
        "label": verdict.label,
        "raw_text": verdict.raw_text,
        "latency": verdict.latency,
        **result.budget(),
        "backend": verdict.backend,
        "template_version": req.template_version,
        "params": config.params(),
    }
    print(_dump(doc))
    return 0


def read_labels(path):
    labels = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            if i == 0 and [x.strip().lower() for x in row] == ["image_id", "label"]:
                continue
            if len(row) != 2 or row[1].strip().capitalize() not in ("Real", "Fake"):
                raise SchemaError(f"bad labels row {i + 1}: {row!r}")
            labels[row[0].strip()] = row[1].strip().capitalize()
    return labels


def score_predictions(pairs):
    """Accuracy and F1 (positive class Fake) over ``(truth, prediction)`` pairs.

    Unparsed predictions are excluded; F1 is ``None`` when it is undefined.
    """
    scored = [(t, p) for t, p in pairs if p in ("Real", "Fake")]
    n_unparsed = len(pairs) - len(scored)
    if not scored:
        return {"n_scored": 0, "n_unparsed": n_unparsed, "accuracy": None, "f1": None}
    tp = sum(t == "Fake" and p == "Fake" for t, p in scored)
    fp = sum(t == "Real" and p == "Fake" for t, p in scored)
    fn = sum(t == "Fake" and p == "Real" for t, p in scored)
    acc = sum(t == p for t, p in scored) / len(scored)
    f1 = None if tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
    return {"n_scored": len(scored), "n_unparsed": n_unparsed, "accuracy": acc, "f1": f1}


def cmd_bench(args):
    config = _config_from_args(args)
    backend_cfg, threshold = _backend_args(args, config)
    template = _template(config)
    directory = Path(args.directory)
    images = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES) if directory.is_dir() else []
    if not images:
        raise EmptyDirectory(f"no PNG/JPEG images in {directory}")
    labels = read_labels(args.labels) if args.labels else None

    def run(path):
        try:
            verdict, result, _, timings = detect_image(path, config, template, backend_cfg, threshold)
        except GatewayError:
            raise
        except EvidenceError as exc:
            return {"image_id": path.stem, "verdict": None, "error": exc.to_dict()}
        S = result.fused.S
        pack_scores = [e.candidate.score for e in result.pack.entries]
        return {
            "image_id": path.stem,
            "verdict": verdict.label,
            "raw_text": verdict.raw_text,
            "scores": {
                "max": float(S.max()),
                "mean": float(S.mean()),
                "pack_mean": float(np.mean(pack_scores)),
            },
            **result.budget(),
            "timing": timings,
        }

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        rows = list(pool.map(run, images))

    doc = {"params": config.params(), "rows": rows}
    if labels is not None:
        pairs = [(labels[r["image_id"]], r["verdict"] or "Unparsed") for r in rows if r["image_id"] in labels]
        doc["aggregate"] = {"n_labeled": len(pairs), **score_predictions(pairs)}
    text = _dump(doc)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_synthbench(args):
    config = _config_from_args(args)
    template = forgery_bench.default_template(args.kind, args.strength, config.patch_size)
    report = forgery_bench.evaluate_localization(
        args.n_seeds, template, config, width=args.size, height=args.size, top_k=args.top_k, base=args.base
    )
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write(out / "report.json")
    print(report.to_json(), end="")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="forgery-evidence", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    for flag, typ in _CONFIG_FLAGS:
        common.add_argument(flag, type=typ, default=None)
    common.add_argument("--backend", choices=["mock", "http"], default=None)
    common.add_argument("--include-full-image", action="store_true")
    common.add_argument("--endpoint", default=None, help="chat-completions URL (else $EVIDENCE_LVLM_ENDPOINT)")
    common.add_argument("--timeout", type=float, default=30.0)
    common.add_argument("--retries", type=int, default=3)

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("mine", parents=[common], help="write an evidence pack for one image")
    p.add_argument("image")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("detect", parents=[common], help="mine evidence and ask the model for a verdict")
    p.add_argument("image")
    p.add_argument("--save-pack", action="store_true")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", parents=[common], help="detect every image in a directory")
    p.add_argument("directory")
    p.add_argument("--labels", help="CSV of image_id,label")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", help="also write the JSON result here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synthbench", parents=[common], help="synthetic localization benchmark")
    p.add_argument("--n-seeds", type=int, default=100)
    p.add_argument("--kind", choices=forgery_bench.KINDS, default="splice_noise")
    p.add_argument("--strength", type=float, default=0.2)
    p.add_argument("--top-k", type=int, default=1)
    p.add_argument("--size", type=int, default=224)
    p.add_argument("--base", choices=forgery_bench.BASES, default="texture")
    p.set_defaults(func=cmd_synthbench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GatewayError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return EXIT_GATEWAY
    except EvidenceError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
