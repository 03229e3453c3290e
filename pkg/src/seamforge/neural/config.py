"""Model and training configuration plus the key-value config file format."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path


@dataclass(frozen=True)
class ModelConfig:
    """Architecture sizes.  Defaults are the full-scale values; see :meth:`toy`."""

    d_model: int = 512
    d_point: int = 384
    graph_widths: tuple[int, ...] = (64, 128, 256, 512)
    decoder_layers: int = 6
    cross_attn_layers: int = 2
    fourier_bands: int = 6
    shape_tokens: int = 32
    shape_points: int = 2048
    heads: int = 8
    ffn_mult: int = 4
    max_len: int = 400

    def __post_init__(self):
        object.__setattr__(self, "graph_widths", tuple(int(w) for w in self.graph_widths))
        positive = ["d_model", "d_point", "decoder_layers", "fourier_bands", "shape_tokens",
                    "shape_points", "heads", "ffn_mult", "max_len"]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.cross_attn_layers < 0:
            raise ValueError("cross_attn_layers must be non-negative")
        if not self.graph_widths or min(self.graph_widths) <= 0:
            raise ValueError("graph_widths must be non-empty and positive")
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")
        if (self.d_model // self.heads) % 2:
            raise ValueError("rotary embeddings need an even per-head dimension")

    @classmethod
    def toy(cls, **overrides) -> "ModelConfig":
        base = dict(d_model=32, d_point=16, graph_widths=(8, 16, 32, 32), decoder_layers=2,
                    cross_attn_layers=2, fourier_bands=4, shape_tokens=8, shape_points=256,
                    heads=4, ffn_mult=2, max_len=400)
        base.update(overrides)
        return cls(**base)

    def to_json(self) -> dict:
        data = asdict(self)
        data["graph_widths"] = list(self.graph_widths)
        return data

    @classmethod
    def from_json(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def digest(self) -> bytes:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).digest()


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    lr: float = 3e-3
    weight_decay: float = 0.0
    batch_size: int = 64
    seed: int = 0
    grad_clip: float = 1.0
    cosine: bool = True
    log_every: int = 25

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        return cls(**_parse_kv(text, cls))

    @classmethod
    def load(cls, path) -> "TrainConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))


def _coerce(raw: str, typ):
    if typ in (bool, "bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typ in (int, "int"):
        return int(raw)
    if typ in (float, "float"):
        return float(raw)
    return raw


def _parse_kv(text: str, cls) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    types = {f.name: f.type for f in fields(cls)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(raw, types[key])
    return out
