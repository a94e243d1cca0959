"""Versioned binary checkpoints for :class:`IdentModel`.

Layout: 8-byte magic, uint16 version, uint32 header length, a UTF-8 JSON
header (model config, tensor names and shapes, optional standardizer), then
the tensors as little-endian float64 in header order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import CheckpointError
from ..io import atomic_write
from .data import Standardizer
from .model import IdentModel, ModelConfig

MAGIC = b"GAITIDNT"
VERSION = 1
_PREFIX = struct.Struct("<8sHI")


def dumps(model: IdentModel, std: Optional[Standardizer] = None) -> bytes:
    names = sorted(model.params)
    header = {
        "config": model.cfg.to_dict(),
        "tensors": [[n, list(model.params[n].shape)] for n in names],
    }
    arrays = [model.params[n] for n in names]
    if std is not None:
        header["tensors"] += [["__std_mean", [std.mean.size]], ["__std_std", [std.std.size]]]
        arrays += [std.mean, std.std]
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    return _PREFIX.pack(MAGIC, VERSION, len(hb)) + hb + body


def loads(data: bytes) -> tuple[IdentModel, Optional[Standardizer]]:
    if len(data) < _PREFIX.size:
        raise CheckpointError("checkpoint truncated before header")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"not an identification checkpoint (magic {magic!r})")
    if version != VERSION:
        raise CheckpointError(f"checkpoint version {version} unsupported (expected {VERSION})")
    try:
        header = json.loads(data[_PREFIX.size:_PREFIX.size + hlen].decode("utf-8"))
        cfg = ModelConfig(**header["config"])
        tensors = header["tensors"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
    pos = _PREFIX.size + hlen
    arrays = {}
    for name, shape in tensors:
        n = int(np.prod(shape)) if shape else 1
        end = pos + 8 * n
        if end > len(data):
            raise CheckpointError(f"checkpoint truncated inside tensor {name!r}")
        arrays[name] = np.frombuffer(data, dtype="<f8", count=n, offset=pos).reshape(shape).copy()
        pos = end
    if pos != len(data):
        raise CheckpointError(f"{len(data) - pos} trailing bytes after the last tensor")
    std = None
    if "__std_mean" in arrays:
        std = Standardizer(arrays.pop("__std_mean"), arrays.pop("__std_std"))
    try:
        model = IdentModel(cfg, arrays)
    except ValueError as exc:
        raise CheckpointError(f"checkpoint shapes do not match its config: {exc}") from exc
    return model, std


def save_checkpoint(model: IdentModel, path, std: Optional[Standardizer] = None) -> None:
    atomic_write(path, dumps(model, std))


def load_checkpoint(path) -> tuple[IdentModel, Optional[Standardizer]]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: cannot read ({exc.strerror})") from exc
    return loads(data)
