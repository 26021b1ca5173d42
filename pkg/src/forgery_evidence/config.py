"""Run configuration: defaults, flat ``key=value`` files and validation."""

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError, ImageFileNotFound


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.7
    k_clusters: int = 4
    k_bands: int = 8
    k1: int = 4
    tau: float = 2.0
    patch_size: int = 16
    sigma: float = 1.0
    epsilon: float = 1e-6
    seed: int = 42
    margin: int = 8
    embeddings_path: Optional[str] = None
    backend: str = "mock"
    prompt_template: Optional[str] = None
    mock_threshold: float = 4.0
    include_full_image: bool = False
    output_dir: str = "out"
    pack_order: str = "score"

    def validate(self):
        checks = [
            (self.alpha >= 0, "InvalidAlpha", "alpha must be >= 0"),
            (self.k_clusters >= 1, "InvalidKClusters", "k_clusters must be >= 1"),
            (self.k_bands >= 1, "InvalidKBands", "k_bands must be >= 1"),
            (self.k1 >= 1, "InvalidK1", "k1 must be >= 1"),
            (self.tau >= 0, "InvalidTau", "tau must be >= 0"),
            (self.patch_size >= 4, "InvalidPatchSize", "patch_size must be >= 4"),
            (self.sigma > 0, "InvalidSigma", "sigma must be > 0"),
            (self.epsilon > 0, "InvalidEpsilon", "epsilon must be > 0"),
            (self.margin >= 0, "InvalidMargin", "margin must be >= 0"),
            (self.backend in ("mock", "http"), "InvalidBackend", "backend must be 'mock' or 'http'"),
            (self.pack_order in ("score", "raster"), "InvalidPackOrder", "pack_order must be 'score' or 'raster'"),
            (
                2 * (self.patch_size - 1) >= self.k_bands,
                "InvalidKBands",
                "k_bands exceeds the number of non-DC diagonals for this patch size",
            ),
        ]
        for ok, kind, message in checks:
            if not ok:
                raise ConfigError(kind, message)
        return self

    def params(self):
        """Parameter snapshot embedded in every evidence pack."""
        return {
            "alpha": self.alpha,
            "k_clusters": self.k_clusters,
            "k1": self.k1,
            "tau": self.tau,
            "k_bands": self.k_bands,
            "patch_size": self.patch_size,
            "sigma": self.sigma,
            "epsilon": self.epsilon,
            "seed": self.seed,
        }

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def coerce(name, raw):
    """Convert a textual value to the type of config field ``name``."""
    if name not in _FIELDS:
        raise ConfigError("UnknownKey", f"unknown config key {name!r}")
    default = _FIELDS[name].default
    try:
        if isinstance(default, bool):
            low = str(raw).strip().lower()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"Invalid{_camel(name)}", f"bad value for {name}: {raw!r}") from None
    value = str(raw).strip()
    return value or None


def _camel(name):
    return "".join(part.capitalize() for part in name.split("_"))


def read_config_file(path):
    """Parse ``key=value`` lines; ``#`` starts a comment, kebab-case keys allowed."""
    path = Path(path)
    if not path.is_file():
        raise ImageFileNotFound(f"no such config file: {path}")
    values = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("ConfigSyntax", f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        values[key] = coerce(key, value)
    return values


def build_config(file_values=None, overrides=None):
    """Defaults, then file values, then explicit overrides; validated."""
    merged = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**merged).validate()
