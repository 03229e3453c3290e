"""Binary weight files.

Layout (little-endian)::

    b"SFWT"  u32 version  32-byte sha256 of the config JSON
    u32 json_len  config JSON
    u32 n_tensors
    per tensor: u16 name_len  name  u8 ndim  u32 dims[ndim]  f32 data
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from ..errors import SeamforgeError
from .config import ModelConfig
from .model import SeamModel

MAGIC = b"SFWT"
VERSION = 1


class WeightFileError(SeamforgeError):
    kind = "io"


def dumps_weights(model: SeamModel) -> bytes:
    cfg = json.dumps(model.config.to_json(), sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<I", VERSION), model.config.digest(), struct.pack("<I", len(cfg)), cfg]
    state = model.state_dict()
    parts.append(struct.pack("<I", len(state)))
    for name, t in state.items():
        raw = name.encode()
        arr = t.detach().cpu().numpy().astype("<f4")
        parts += [struct.pack("<H", len(raw)), raw, struct.pack("<B", arr.ndim),
                  struct.pack(f"<{arr.ndim}I", *arr.shape), arr.tobytes()]
    return b"".join(parts)


def save_weights(model: SeamModel, path) -> None:
    Path(path).write_bytes(dumps_weights(model))


def loads_weights(data: bytes) -> SeamModel:
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise WeightFileError("weight file is truncated")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if take(4) != MAGIC:
        raise WeightFileError("not a seamforge weight file")
    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise WeightFileError(f"unsupported weight file version {version}")
    digest = take(32)
    (n,) = struct.unpack("<I", take(4))
    config = ModelConfig.from_json(json.loads(take(n)))
    if config.digest() != digest:
        raise WeightFileError("config digest mismatch")
    model = SeamModel(config)
    expected = model.state_dict()
    (count,) = struct.unpack("<I", take(4))
    state = {}
    for _ in range(count):
        (ln,) = struct.unpack("<H", take(2))
        name = take(ln).decode()
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        arr = np.frombuffer(take(4 * int(np.prod(shape, dtype=np.int64))), dtype="<f4").reshape(shape)
        if name not in expected or tuple(expected[name].shape) != shape:
            raise WeightFileError(f"unexpected tensor {name} {shape}")
        if not np.isfinite(arr).all():
            raise WeightFileError(f"tensor {name} has non-finite values")
        state[name] = torch.from_numpy(arr.astype(np.float32))
    if pos != len(data):
        raise WeightFileError("trailing bytes after last tensor")
    missing = set(expected) - set(state)
    if missing:
        raise WeightFileError(f"missing tensors: {sorted(missing)}")
    model.load_state_dict(state)
    model.eval()
    return model


def load_weights(path) -> SeamModel:
    return loads_weights(Path(path).read_bytes())
