"""Prompting an external multimodal chat model with an evidence pack.

Requests follow the common chat-completions wire format: a system message
followed by one user message whose content interleaves text parts and
``image_url`` parts carrying base64 PNG data URLs.
"""

import base64
import io
import json
import math
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests
from PIL import Image

from .errors import BackendTimeout, EmptyEvidence, HttpError, MalformedResponse, SchemaError

TEMPLATE_VERSION = "1"
DEFAULT_MAX_TOKENS = 16
DEFAULT_MODEL = "frozen-lvlm"

ENV_ENDPOINT = "EVIDENCE_LVLM_ENDPOINT"
ENV_TOKEN = "EVIDENCE_LVLM_TOKEN"
ENV_MODEL = "EVIDENCE_LVLM_MODEL"

_SCORE_RE = re.compile(r"score=([-+]?(?:inf|nan|\d+(?:\.\d*)?(?:[eE][-+]?\d+)?))", re.IGNORECASE)
_LABEL_RE = re.compile(r"\b(real|fake)\b", re.IGNORECASE)


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt pieces; ``caption`` is formatted with ``idx``, ``r``, ``c`` and ``score``.

    The mock backend reads scores back from the ``score=`` token, so custom
    captions meant for mock runs should keep it.
    """

    system_text: str = (
        "You are an image forensics analyst. You will be shown evidence patches "
        "cropped from a single image, each selected because it looks locally "
        "inconsistent with the rest of the image."
    )
    caption: str = "Evidence {idx}: grid cell (row {r}, col {c}), score={score:.6f}"
    question_text: str = (
        "Based on these evidence patches, has the image been generated or manipulated? "
        'Answer with exactly one word: "Real" or "Fake".'
    )
    version: str = TEMPLATE_VERSION

    def __post_init__(self):
        if not self.question_text.strip():
            raise SchemaError("question_text must be non-empty")
        try:
            self.caption.format(idx=0, r=1, c=1, score=0.0)
        except (KeyError, IndexError, ValueError) as exc:
            raise SchemaError(f"caption template has unresolvable placeholders: {exc}") from exc


def load_template(path):
    """Read a JSON template with keys ``system_text``, ``caption``, ``question_text``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    allowed = {"system_text", "caption", "question_text", "version"}
    if not isinstance(doc, dict) or not set(doc) <= allowed:
        raise SchemaError(f"prompt template keys must be a subset of {sorted(allowed)}")
    return PromptTemplate(**doc)


@dataclass(frozen=True)
class Part:
    """One message part; ``role`` is system, caption, image or question."""

    role: str
    text: str = ""
    image_png: bytes = b""

    @property
    def is_image(self):
        return self.role == "image"


@dataclass(frozen=True)
class DetectionRequest:
    model_name: str
    parts: tuple
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS
    template_version: str = TEMPLATE_VERSION

    def body(self):
        """JSON-serializable chat-completions request body."""
        system = [p.text for p in self.parts if p.role == "system"]
        content = []
        for p in self.parts:
            if p.role == "system":
                continue
            if p.is_image:
                url = "data:image/png;base64," + base64.b64encode(p.image_png).decode("ascii")
                content.append({"type": "image_url", "image_url": {"url": url}})
            else:
                content.append({"type": "text", "text": p.text})
        messages = [{"role": "system", "content": s} for s in system]
        messages.append({"role": "user", "content": content})
        return {
            "model": self.model_name,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def body_bytes(self):
        return json.dumps(self.body(), separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class Verdict:
    label: str
    raw_text: str
    latency: float
    backend: str


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str
    token: str = ""
    timeout: float = 30.0
    retries: int = 3
    backoff: tuple = field(default=(1.0, 2.0, 4.0))

    @classmethod
    def from_env(cls, **overrides):
        endpoint = overrides.pop("endpoint", None) or os.environ.get(ENV_ENDPOINT, "")
        token = overrides.pop("token", None) or os.environ.get(ENV_TOKEN, "")
        return cls(endpoint=endpoint, token=token, **overrides)


def model_name_from_env():
    return os.environ.get(ENV_MODEL, DEFAULT_MODEL)


def encode_png(img):
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def build_request(pack, template=None, include_full_image=False, full_image=None, model_name=None):
    """Interleave captions and crops in pack order, then the question."""
    template = template or PromptTemplate()
    if not pack.entries:
        raise EmptyEvidence("cannot prompt with an empty evidence pack")
    parts = [Part("system", text=template.system_text)]
    for idx, entry in enumerate(pack.entries):
        cand = entry.candidate
        caption = template.caption.format(idx=idx, r=cand.coord.r, c=cand.coord.c, score=cand.score)
        parts.append(Part("caption", text=caption))
        parts.append(Part("image", image_png=encode_png(entry.crop)))
    if include_full_image:
        if full_image is None:
            raise ValueError("include_full_image requires the full image")
        parts.append(Part("image", image_png=encode_png(full_image)))
    parts.append(Part("question", text=template.question_text))
    return DetectionRequest(
        model_name=model_name or model_name_from_env(),
        parts=tuple(parts),
        template_version=template.version,
    )


def parse_verdict(text):
    """Return ``Real``, ``Fake`` or ``Unparsed``; the last label word wins."""
    found = _LABEL_RE.findall(text or "")
    if not found:
        return "Unparsed"
    return found[-1].capitalize()


def mock_backend(request, threshold=1.0):
    """Deterministic stand-in model: "Fake" iff the mean caption score exceeds ``threshold``."""
    scores = []
    for p in request.parts:
        if p.role == "caption":
            m = _SCORE_RE.search(p.text)
            if m:
                scores.append(float(m.group(1)))
    if not scores:
        return "Real"
    return "Fake" if math.fsum(scores) / len(scores) > threshold else "Real"


def _extract_text(payload):
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponse("response has no choices[0].message.content") from None
    if isinstance(content, list):
        texts = [c.get("text") for c in content if isinstance(c, dict) and c.get("type") == "text"]
        if not texts or not all(isinstance(t, str) for t in texts):
            raise MalformedResponse("response content carries no text part")
        return "".join(texts)
    if not isinstance(content, str):
        raise MalformedResponse("response content is not text")
    return content


def query_backend(request, cfg=None, *, mock_threshold=None, session=None, sleep=time.sleep):
    """Send ``request`` and parse the model's verdict.

    With ``mock_threshold`` set (or no config) the in-process mock answers
    and the recorded latency is 0.0, keeping mock runs byte-reproducible.
    Transport failures (timeouts, refused connections) are retried with the
    configured backoff; HTTP errors and malformed bodies are not.
    """
    if cfg is None or mock_threshold is not None:
        text = mock_backend(request, math.inf if mock_threshold is None else mock_threshold)
        return Verdict(label=parse_verdict(text), raw_text=text, latency=0.0, backend="mock")

    http = session or requests.Session()
    headers = {"Content-Type": "application/json"}
    if cfg.token:
        headers["Authorization"] = f"Bearer {cfg.token}"
    body = request.body_bytes()
    attempts = cfg.retries + 1
    last_error = None
    for attempt in range(attempts):
        start = time.perf_counter()
        try:
            resp = http.post(cfg.endpoint, data=body, headers=headers, timeout=cfg.timeout)
        except (requests.Timeout, requests.ConnectionError) as exc:
            last_error = exc
            if attempt < attempts - 1:
                sleep(cfg.backoff[min(attempt, len(cfg.backoff) - 1)])
            continue
        latency = time.perf_counter() - start
        if resp.status_code != 200:
            raise HttpError(resp.status_code, resp.text[:200])
        try:
            payload = resp.json()
        except ValueError:
            raise MalformedResponse("response body is not JSON") from None
        text = _extract_text(payload)
        return Verdict(label=parse_verdict(text), raw_text=text, latency=latency, backend=cfg.endpoint)
    raise BackendTimeout(f"no response from {cfg.endpoint} after {attempts} attempts: {last_error}")
