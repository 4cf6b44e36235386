"""Run configuration: flat key=value files, flag overrides, seed substreams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import zlib


class ConfigError(ValueError):
    """Bad or missing configuration (maps to CLI exit code 2)."""


@dataclass
class RunConfig:
    """Every knob of the pipeline, with the system defaults."""

    corpus_dir: str = ""
    embeddings: str = ""
    test_year: int = 2006
    # model dims
    dim: int = 300              # embedding size d
    filters: int = 300          # convolution filter count c
    window_k: int = 2           # window covers 2k+1 tokens
    hidden: int = 300           # MLP hidden width h
    # training
    lr: float = 1e-4
    clip_norm: float = 5.0
    epochs: int = 10
    seed: int = 1
    precision: str = "double"   # "double" | "single"
    checkpoint_interval: int = 0  # epochs between checkpoints; 0 = final only
    token_cap: int = 2000       # per-step sentence-token cap; 0 disables
    # loss
    margin1: float = 0.1
    margin2: float = 0.1
    margin3: float = 0.1
    margin4: float = 0.1
    coeff_a1: float = 1.0
    coeff_a2: float = 1.0
    coeff_b1: float = 0.5
    coeff_b2: float = 0.1
    coeff_b3: float = 0.01
    coeff_b4: float = 0.02
    negative_set_size: int = 2
    # selection
    top_t: int = 10
    radius: int = 4

    def validate(self) -> None:
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.precision not in ("double", "single"):
            raise ConfigError(f"precision must be 'double' or 'single', got {self.precision!r}")
        if self.negative_set_size < 1:
            raise ConfigError(f"negative_set_size must be >= 1, got {self.negative_set_size}")
        if min(self.margin1, self.margin2, self.margin3, self.margin4) < 0:
            raise ConfigError("margins must be non-negative")
        if self.top_t < 1:
            raise ConfigError(f"top_t must be >= 1, got {self.top_t}")
        if self.radius < 0:
            raise ConfigError(f"radius must be >= 0, got {self.radius}")

    def as_flat_text(self) -> str:
        """Canonical key=value rendering (sorted keys, one per line)."""
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            lines.append(f"{f.name}={getattr(self, f.name)}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.as_flat_text().encode("utf-8")).hexdigest()[:16]

    def header_lines(self) -> list[str]:
        """Comment header embedded verbatim in every output artifact."""
        lines = [f"config_hash={self.config_hash()}", f"seed={self.seed}"]
        lines += ["config: " + line for line in self.as_flat_text().splitlines()]
        return lines


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"config key {name}: cannot parse {raw!r}") from exc


def read_config_file(path: str | Path) -> dict:
    """Parse a flat key=value config file ('#' starts a comment)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def build_run_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults <- config file <- explicit flag overrides."""
    cfg = RunConfig()
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def substream(seed: int, name: str) -> np.random.Generator:
    """Named RNG substream; all randomness is derived from one base seed."""
    return np.random.default_rng([seed, zlib.crc32(name.encode("utf-8"))])
